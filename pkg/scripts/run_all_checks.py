"""Run every verification suite and write the JSON report."""
import argparse
import json

from tangle import verify as vf


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=vf.default_workers())
    p.add_argument("--out", default="verify_report.json")
    args = p.parse_args()
    cfg = vf.SuiteConfig(trials=args.trials, seed=args.seed, workers=args.workers)
    reports = vf.run_suite("all", cfg)
    for r in reports:
        print(f"{r.name:24s} trials={r.trials:6d} violations={r.violations} "
              f"worst={r.worst_residual: .3e} {r.runtime_ms / 1000:6.1f}s")
    doc = {"seed": args.seed, "violations": sum(r.violations for r in reports),
           "reports": [r.to_dict() for r in reports]}
    with open(args.out, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
    print(f"total violations {doc['violations']}; report in {args.out}")


if __name__ == "__main__":
    main()
