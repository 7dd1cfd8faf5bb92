#!/usr/bin/env python3
"""Walk the curated layout suite with the ground-truth oracle classifier.

Shows the whole pipeline without any training: 1D decode, NoRel cut,
bbox sort, local/global connection, LaTeX rendering. Useful as a sanity
check and as a reference for what the recognizer's stages produce.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from srtrec.ink import normalize
from srtrec.latex import to_latex
from srtrec.oracle import OracleClassifier
from srtrec.synthetic import curated_cases, render_sample
from srtrec.treebuild import recognize_detailed


def main():
    ok = 0
    cases = curated_cases()
    for name, spec in cases:
        sample = normalize(render_sample(spec, name))
        oracle = OracleClassifier(sample.ground_truth)
        outcome = recognize_detailed(oracle, sample)
        exact = outcome.srt == sample.ground_truth
        ok += exact
        oned = " ".join(outcome.oned.tokens)
        status = "ok " if exact else "FAIL"
        print(f"[{status}] {name:22s} {to_latex(outcome.srt):32s} 1D: {oned}")
    print(f"\n{ok}/{len(cases)} layouts reconstructed exactly")
    return 0 if ok == len(cases) else 1


if __name__ == "__main__":
    sys.exit(main())
