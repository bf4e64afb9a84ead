"""Coverage overhead, and replaying a stored failing test.

The overhead ratio is actions executed without coverage probes divided by
actions executed with them, in the same wall-clock slice.  Failing tests
are stored as plain text and replay deterministically.
"""

from __future__ import annotations

from pathlib import Path

import locbias.bench
from locbias.bench import get_harness
from locbias.harness import parse_testcase, read_comments
from locbias.runner import overhead_ratios
from locbias.strategies import RANDOM, StrategyConfig

report = overhead_ratios(get_harness("sortedlist"), StrategyConfig(RANDOM), seconds=0.5, repetitions=4)
for off, on, ratio in zip(report.actions_off, report.actions_on, report.ratios):
    print(f"without {off:>7}  with {on:>7}  ratio {ratio:.3f}")
print(f"mean ratio {report.mean:.3f}")

# a shipped witness for the AVL rotation fault
text = (Path(locbias.bench.__file__).parent / "witnesses" / "avl-rotation.test").read_text()
print(text)
meta = read_comments(text)
harness = get_harness(meta["harness"], {"rotation": True})
result = harness.replay(parse_testcase(text, harness))
print(result.status, result.signature, "recorded:", meta["signature"])
