import csv
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xgx.errors import BadValue, EmptyFile, EmptyInput, MissingColumn, UnknownLevel
from xgx.events import (CSV_HEADER, OTHER, GroupSelector, ShotEvent, build_encoding, encode, match_split,
                        parse_csv, select, write_csv)

from conftest import FIXTURE_CSV

HEADER = ",".join(CSV_HEADER)


def _write(tmp_path, *lines, name="shots.csv"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _event(**kw):
    base = dict(match_id="m1", player="A", team="T", opponent="O", season="2022/23", league="L",
                minute=10, home_away="home", situation="OpenPlay", shot_type="RightFoot",
                last_action="Pass", distance_to_goal=12.0, angle_to_goal=40.0,
                is_goal=False, on_target=False)
    base.update(kw)
    return ShotEvent(**base)


def test_parse_single_row(tmp_path):
    path = _write(tmp_path, HEADER, "m1,Kane,TOT,CHE,2022/23,EPL,23,home,OpenPlay,RightFoot,Pass,11.2,34.5,1,1")
    (ev,) = parse_csv(path)
    assert ev.minute == 23
    assert ev.is_goal is True and ev.on_target is True
    assert ev.player == "Kane" and ev.distance_to_goal == 11.2


def test_goal_off_target_rejected(tmp_path):
    path = _write(tmp_path, HEADER,
                  "m1,Kane,TOT,CHE,2022/23,EPL,23,home,OpenPlay,RightFoot,Pass,11.2,34.5,0,0",
                  "m1,Kane,TOT,CHE,2022/23,EPL,24,home,OpenPlay,RightFoot,Pass,11.2,34.5,1,0")
    with pytest.raises(BadValue) as err:
        parse_csv(path)
    assert err.value.row == 2 and err.value.column == "on_target"


@pytest.mark.parametrize("column,token", [
    ("minute", "abc"), ("minute", "131"), ("angle_to_goal", "0"), ("angle_to_goal", "181"),
    ("distance_to_goal", "nan"), ("distance_to_goal", "-1"), ("home_away", "neutral"),
    ("situation", "Throw"), ("is_goal", "yes"),
])
def test_bad_tokens(tmp_path, column, token):
    values = "m1,Kane,TOT,CHE,2022/23,EPL,23,home,OpenPlay,RightFoot,Pass,11.2,34.5,0,0".split(",")
    values[CSV_HEADER.index(column)] = token
    path = _write(tmp_path, HEADER, ",".join(values))
    with pytest.raises(BadValue) as err:
        parse_csv(path)
    assert err.value.column == column and err.value.row == 1


def test_penalty_must_be_on_the_spot(tmp_path):
    path = _write(tmp_path, HEADER, "m1,Kane,TOT,CHE,2022/23,EPL,23,home,Penalty,RightFoot,Standard,16.0,90,0,0")
    with pytest.raises(BadValue, match="penalty"):
        parse_csv(path)


def test_missing_column_named(tmp_path):
    header = HEADER.replace(",shot_type", "")
    path = _write(tmp_path, header, "m1,Kane,TOT,CHE,2022/23,EPL,23,home,OpenPlay,Pass,11.2,34.5,1,1")
    with pytest.raises(MissingColumn) as err:
        parse_csv(path)
    assert err.value.column == "shot_type"


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(EmptyFile):
        parse_csv(path)


def test_moukoko_fixture_file(tmp_path, events):
    rows = [e for e in events if e.player == "Youssoufa Moukoko"]
    path = tmp_path / "moukoko.csv"
    write_csv(rows, path)
    parsed = parse_csv(path)
    assert len(parsed) == 35
    assert sum(e.is_goal for e in parsed) == 7


def test_shipped_fixture_matches_generator(events):
    assert parse_csv(FIXTURE_CSV) == events


def test_csv_round_trip(tmp_path, events):
    path = tmp_path / "rt.csv"
    write_csv(events[:500], path)
    assert parse_csv(path) == events[:500]


def test_rare_levels_merge():
    evs = ([_event(last_action="Pass")] * 50 + [_event(last_action="Cross")] * 30
           + [_event(last_action="Chipped")])
    enc = build_encoding(evs, rare_threshold=5)
    assert enc.levels["last_action"] == ("Pass", "Cross", OTHER)


def test_threshold_zero_keeps_everything():
    evs = [_event(last_action=a) for a in ("Pass", "Cross", "Chipped", "Cross")]
    enc = build_encoding(evs, rare_threshold=0)
    assert enc.levels["last_action"] == ("Cross", "Chipped", "Pass")
    assert OTHER not in enc.levels["last_action"]


def test_build_encoding_empty():
    with pytest.raises(EmptyInput):
        build_encoding([])


def _csv_level_counts(path):
    # standalone oracle: plain csv module, no xgx parsing
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {name: Counter(r[name] for r in rows) for name in ("home_away", "situation", "shot_type", "last_action")}


def test_fixture_level_count_against_frequency_oracle(events):
    counts = _csv_level_counts(FIXTURE_CSV)
    assert len(counts["last_action"]) == 39
    enc = build_encoding(events, rare_threshold=25)
    kept = sum(1 for c in counts["last_action"].values() if c >= 25)
    has_rare = any(c < 25 for c in counts["last_action"].values())
    assert len(enc.levels["last_action"]) == kept + int(has_rare)


def test_fixture_column_count_against_oracle(dataset):
    counts = _csv_level_counts(FIXTURE_CSV)
    expected = 3
    for name, c in counts.items():
        kept = sum(1 for v in c.values() if v >= 25)
        expected += kept + int(kept < len(c))
    assert dataset.X.shape[1] == expected


def test_one_hot_blocks_sum_to_one(dataset):
    enc = dataset.encoding
    for name in enc.levels:
        block = dataset.X[:, enc.feature_columns(name)]
        assert np.all(block.sum(axis=1) == 1.0)


def test_single_event_one_hot():
    evs = [_event(situation="OpenPlay")] * 3 + [_event(situation="FromCorner")] * 3
    enc = build_encoding(evs, rare_threshold=1)
    ds = encode(evs[:1], enc)
    sit = ds.X[0, enc.feature_columns("situation")]
    assert len(sit) == 2 and sit.sum() == 1.0


def test_unseen_level_goes_to_other():
    evs = [_event(last_action="Pass")] * 10 + [_event(last_action="Odd")]
    enc = build_encoding(evs, rare_threshold=5)
    ds = encode([_event(last_action="NeverSeen")], enc)
    assert ds.X[0, enc.level_column("last_action", OTHER)] == 1.0


def test_unknown_level_without_other():
    enc = build_encoding([_event(last_action="Pass")], rare_threshold=0)
    with pytest.raises(UnknownLevel):
        encode([_event(last_action="Cross")], enc)


def test_encode_deterministic(events, dataset):
    again = encode(events, dataset.encoding)
    assert again.X.tobytes() == dataset.X.tobytes()


def test_decode_inverts_encode(events, dataset):
    enc = dataset.encoding
    for i in range(0, len(events), 97):
        ev = events[i]
        decoded = enc.decode_row(dataset.X[i])
        for name, value in decoded.items():
            original = getattr(ev, name)
            if name in enc.levels and original not in enc.levels[name]:
                assert value == OTHER
            else:
                assert value == original


def test_dataset_is_read_only(dataset):
    with pytest.raises(ValueError):
        dataset.X[0, 0] = 1.0


def test_select_ferguson(dataset):
    idx = select(dataset, GroupSelector(player="Evan Ferguson", season="2022/23"))
    assert idx.size == 36
    assert np.all(np.diff(idx) > 0)


def test_select_nothing(dataset):
    assert select(dataset, GroupSelector(player="Nobody")).size == 0


@pytest.mark.parametrize("team,goals", [("FC Köln", 54), ("RCD Espanyol", 69), ("Brentford FC", 46)])
def test_select_conceded_on_target(dataset, team, goals):
    idx = select(dataset, GroupSelector(team=team, role="conceded", on_target=True))
    assert int(dataset.y[idx].sum()) == goals
    assert np.all(dataset.meta["opponent"][idx] == team)


def test_selector_parse():
    sel = GroupSelector.parse(['player="Mathys Tel"', "season=2022/23", "on_target=1"])
    assert sel == GroupSelector(player="Mathys Tel", season="2022/23", on_target=True)
    with pytest.raises(ValueError):
        GroupSelector.parse(["colour=red"])


_TEAMS = ["Borussia Dortmund", "FC Köln", "SSC Napoli", "Lille OSC", None]
_SEASONS = ["2020/21", "2021/22", "2022/23", None]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(_TEAMS), st.sampled_from(_SEASONS), st.sampled_from(["home", "away", None]),
       st.sampled_from([True, False, None]), st.sampled_from(["taken", "conceded"]))
def test_select_conjunction_is_intersection(dataset, team, season, side, on_target, role):
    a = GroupSelector(team=team, season=season, role=role)
    b = GroupSelector(home_away=side, on_target=on_target, role=role)
    both = replace(a, home_away=side, on_target=on_target)
    assert np.array_equal(select(dataset, both), np.intersect1d(select(dataset, a), select(dataset, b)))


def test_match_split_keeps_matches_together(dataset):
    train, test = match_split(dataset)
    assert train.size + test.size == dataset.n
    mids = dataset.meta["match_id"]
    assert not set(mids[train]) & set(mids[test])
    assert 0.1 < test.size / dataset.n < 0.3
