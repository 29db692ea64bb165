"""
Training the reference xG models
================================

Load the bundled shot corpus, split it by match, fit the boosted-tree
and logistic references and compare them on the held-out matches.
"""
import os

from xgx import build_encoding, encode, evaluate, match_split, parse_csv, save_model, train_gbt, train_logistic

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data", "fixture_shots.csv")
OUT = os.environ.get("XGX_WALKTHROUGH_OUT", "walkthrough_output")
os.makedirs(OUT, exist_ok=True)

events = parse_csv(DATA)
dataset = encode(events, build_encoding(events))
print(f"{dataset.n} shots, {dataset.d} encoded columns")

###############################################################################
# All shots of one match land on the same side of the split.
train_idx, test_idx = match_split(dataset)
train, test = dataset.subset(train_idx), dataset.subset(test_idx)

gbt = train_gbt(train)
logit = train_logistic(train, penalty=1.0)

for name, model in (("gbt", gbt), ("logistic", logit)):
    rep = evaluate(model, test)
    print(f"{name:9s} AUC {rep.auc:.3f}  log-loss {rep.log_loss:.4f}  Brier {rep.brier:.4f}")

###############################################################################
# Calibration: ten equal-count bins of the boosted model's predictions.
for b in evaluate(gbt, test).calibration:
    print(f"  n={b['count']:4d}  predicted {b['mean_predicted']:.3f}  observed {b['observed_rate']:.3f}")

save_model(gbt, os.path.join(OUT, "gbt.json"))
print("saved", os.path.join(OUT, "gbt.json"))
