"""
Scoring potential of young forwards
===================================

Aggregated profiles of five young forwards over distance and angle. A
higher curve means the model expects more goals from that player's shots
when they are moved to the given distance or angle.
"""
import os

from xgx import GroupSelector, build_encoding, encode, match_split, parse_csv, train_gbt
from xgx.analysis import render_svg, scoring_potential

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.environ.get("XGX_WALKTHROUGH_OUT", "walkthrough_output")
events = parse_csv(os.path.join(HERE, "..", "data", "fixture_shots.csv"))
dataset = encode(events, build_encoding(events))
model = train_gbt(dataset.subset(match_split(dataset)[0]))

players = ["Youssoufa Moukoko", "Alejandro Garnacho", "Mathys Tel", "Jamie Bynoe-Gittens", "Evan Ferguson"]
report = scoring_potential(model, dataset, [GroupSelector(player=p) for p in players])

for table in report.tables:
    near = table["grid"].index(min(table["grid"], key=lambda v: abs(v - table["reference_mean"])))
    print(f"{table['feature']} (group mean {table['reference_mean']:.1f})")
    for row in sorted(table["rows"], key=lambda r: r["ranks"][near]):
        print(f"  #{row['ranks'][near]} {row['subject']:45s} {row['values'][near]:.3f}")

print(render_svg(report, OUT))
