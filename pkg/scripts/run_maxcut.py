#!/usr/bin/env python3
"""MaxCut on planted-partition and Erdos-Renyi graphs: pruning greedy against classic greedy."""
import argparse
import json
import logging
import os
import time

from subcurv import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20, help="number of seeds per configuration")
    ap.add_argument("--out-dir", default="results/maxcut", help="directory for records.json and report.md")
    ap.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown",
                    help="format of the printed report")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress per cell")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    t0 = time.perf_counter()
    records = harness.run_maxcut_suite(harness.maxcut_configs(seeds=range(args.seeds)), progress=logging.info)
    harness.verify_records(records)
    os.makedirs(args.out_dir, exist_ok=True)
    harness.emit_report(records, "json", os.path.join(args.out_dir, "records.json"))
    harness.emit_report(records, "markdown", os.path.join(args.out_dir, "report.md"))
    print(harness.emit_report(records, args.format))
    print(json.dumps({"records": len(records), "digest": harness.records_digest(records),
                      "seconds": round(time.perf_counter() - t0, 1)}))


if __name__ == "__main__":
    main()
