"""
Explaining a single shot
========================

Shapley attributions for one of Mathys Tel's shots, exact and sampled.
"""
import os

from xgx import (BackgroundSet, FeatureGrouping, GroupSelector, build_encoding, encode, exact_shap,
                 match_split, parse_csv, sampled_shap, select, train_gbt)

HERE = os.path.dirname(os.path.abspath(__file__))
events = parse_csv(os.path.join(HERE, "..", "data", "fixture_shots.csv"))
dataset = encode(events, build_encoding(events))
train_idx, _ = match_split(dataset)
model = train_gbt(dataset.subset(train_idx))

# 100 reference rows from the training matches; phi0 is their mean prediction
background = BackgroundSet.draw(dataset, 100, seed=42, candidates=train_idx)
grouping = FeatureGrouping.from_encoding(dataset.encoding)

row = select(dataset, GroupSelector(player="Mathys Tel"))[0]
x = dataset.X[row]
print(dataset.encoding.decode_row(x))

exact = exact_shap(model, x, background, grouping, observation_id=int(row))
print(f"baseline {exact.phi0:.4f} -> prediction {exact.prediction:.4f}")
for name, value in sorted(exact.phi.items(), key=lambda kv: -abs(kv[1])):
    print(f"  {name:18s} {value:+.4f}")

###############################################################################
# Permutation sampling estimates the same numbers, with a standard error.
est = sampled_shap(model, x, background, grouping, n_perm=500, seed=1)
for name in exact.phi:
    print(f"  {name:18s} exact {exact.phi[name]:+.4f}  sampled {est.phi[name]:+.4f} +/- {est.se[name]:.4f}")
