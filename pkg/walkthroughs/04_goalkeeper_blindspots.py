"""
Goalkeeper blind spots
======================

For three keepers, average the model's xG over the on-target shots their
team conceded, level by level of situation, shot type and venue. The
level where a keeper ranks worst against the others is flagged.
"""
import os

from xgx import GroupSelector, build_encoding, encode, match_split, parse_csv, train_gbt
from xgx.analysis import goalkeeper_blindspot, render_svg

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.environ.get("XGX_WALKTHROUGH_OUT", "walkthrough_output")
events = parse_csv(os.path.join(HERE, "..", "data", "fixture_shots.csv"))
dataset = encode(events, build_encoding(events))
model = train_gbt(dataset.subset(match_split(dataset)[0]))

keepers = {"Marvin Schwabe": "FC Köln", "Alex Remino": "RCD Espanyol", "David Raya": "Brentford FC"}
report = goalkeeper_blindspot(model, dataset,
                              [GroupSelector(team=t, season="2022/23") for t in keepers.values()],
                              labels=list(keepers))

for art in report.artifacts:
    if art["type"] == "metrics":
        print(f"{art['subject']:15s} conceded {art['goals_conceded']:3d}  xGA {art['xga']:.1f}  "
              f"xGAOT {art['xgaot']:.1f}")

for table in report.tables:
    print(table["feature"])
    for row in table["rows"]:
        print(f"  {row['subject']:15s} ranks {row['ranks']}  blind spots {row['blind_spots']}")

print(render_svg(report, OUT))
