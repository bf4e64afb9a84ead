"""From mean LOC per action class to selection probabilities.

Classes whose actions enter no SUT code (value initializers, say) share a
fixed 20% of the mass; everything else is proportional to mean LOC.
"""

from __future__ import annotations

from locbias.locmap import loc_distribution

# one zero-LOC class and two that reach 30 and 20 lines of SUT code
table = loc_distribution({"int": 0, "insert": 30, "delete": 20})
for cid in table.class_ids:
    print(f"{cid:<8} {table[cid]:.3f}")
# int 0.200, insert 0.480, delete 0.320

# two zero classes split the 20% evenly
table = loc_distribution({"a": 0, "b": 0, "c": 30, "d": 20, "e": 14})
print({c: round(p, 3) for c, p in table.probs.items()})

# no zero class: purely proportional.  no positive class: uniform.
print(loc_distribution({"x": 10, "y": 30}).probs)
print(loc_distribution({"x": 0, "y": 0}).probs)

# only ratios matter, so rescaling every mean leaves the table alone
same = loc_distribution({"int": 0, "insert": 3000, "delete": 2000})
print(same.probs == loc_distribution({"int": 0, "insert": 30, "delete": 20}).probs)
