"""End-to-end experiment pipeline: sweep, records, and the phase picture.

Runs a small (lambda, delta) capacity-trend sweep for the Cantor dust
through the command-line driver, then renders the record stream into a CSV
table and an SVG heatmap with the critical curve delta_c(lambda) overlaid.
Rerunning is free: completed cells are skipped by record id.
"""

import pathlib

from snowcap.cli import run_subcommand


def main():
    out = pathlib.Path("phase_out")
    out.mkdir(exist_ok=True)
    records = str(out / "records.jsonl")

    rc = run_subcommand(
        ["sweep", "--family", "cantor", "--d", "2",
         "--lambdas", "0.15:0.4:6", "--deltas", "0:2.5:6",
         "--resolution", "64", "--out", records]
    )
    assert rc == 0, "sweep failed"

    rc = run_subcommand(
        ["report", "--in", records, "--out", str(out / "phase.svg")]
    )
    assert rc == 0, "report failed"
    print(f"wrote {out}/records.jsonl, {out}/phase.csv, {out}/phase.svg")
    print("cells above the dashed delta_c(lambda) curve trend toward zero capacity.")


if __name__ == "__main__":
    main()
