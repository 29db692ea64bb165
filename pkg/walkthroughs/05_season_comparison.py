"""
Comparing two seasons of one team
=================================

Mean aggregated SHAP of Napoli's shots in two seasons. The change per
feature shows which shot characteristics moved the team's average xG.
"""
import os

from xgx import build_encoding, encode, match_split, parse_csv, train_gbt
from xgx.analysis import render_svg, season_comparison

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.environ.get("XGX_WALKTHROUGH_OUT", "walkthrough_output")
events = parse_csv(os.path.join(HERE, "..", "data", "fixture_shots.csv"))
dataset = encode(events, build_encoding(events))
model = train_gbt(dataset.subset(match_split(dataset)[0]))

report = season_comparison(model, dataset, "SSC Napoli", ["2021/22", "2022/23"])

for art in report.artifacts:
    if art["type"] == "ashap":
        print(f"{art['subject']}: n={art['n']} mean xG {art['mean_prediction']:.4f} (baseline {art['phi0']:.4f})")
    elif art["type"] == "metrics":
        print(f"  goals {art['goals']}  xG {art['xg']:.1f}  xG/shot {art['xg_per_shot']:.3f}")

print("largest changes")
for row in report.tables[0]["rows"][:4]:
    print(f"  {row['feature']:18s} {row['from']:+.4f} -> {row['to']:+.4f}  ({row['delta']:+.4f})")

print(render_svg(report, OUT))
