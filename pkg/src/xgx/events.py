"""Shot-event ingestion, validation, one-hot encoding and group selection.

The CSV layout is fixed (see ``CSV_HEADER``). Booleans are written as 0/1,
distances in meters and angles in degrees.
"""
from __future__ import annotations

import csv
import hashlib
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BadValue, EmptyFile, EmptyInput, MissingColumn, UnknownFeature, UnknownLevel

CSV_HEADER = (
    "match_id", "player", "team", "opponent", "season", "league", "minute",
    "home_away", "situation", "shot_type", "last_action", "distance_to_goal",
    "angle_to_goal", "is_goal", "on_target",
)

HOME_AWAY = ("home", "away")
SITUATIONS = ("OpenPlay", "FromCorner", "SetPiece", "DirectFreekick", "Penalty")
SHOT_TYPES = ("Head", "LeftFoot", "RightFoot", "OtherBodyPart")

# model features, in canonical column order
FEATURES = (
    "minute", "home_away", "situation", "shot_type", "last_action",
    "distance_to_goal", "angle_to_goal",
)
CONTINUOUS = ("minute", "distance_to_goal", "angle_to_goal")
CATEGORICAL = ("home_away", "situation", "shot_type", "last_action")
META_FIELDS = ("match_id", "player", "team", "opponent", "season", "league", "home_away")

OTHER = "OTHER"
DEFAULT_RARE_THRESHOLD = 25
PENALTY_BAND = (10.5, 11.5)
MAX_DISTANCE = 120.0
MAX_MINUTE = 130


@dataclass(frozen=True)
class ShotEvent:
    match_id: str
    player: str
    team: str
    opponent: str
    season: str
    league: str
    minute: int
    home_away: str
    situation: str
    shot_type: str
    last_action: str
    distance_to_goal: float
    angle_to_goal: float
    is_goal: bool
    on_target: bool

    def validate(self, row=None):
        """Raise ``BadValue`` if any field violates the event invariants."""
        def bad(column, reason):
            raise BadValue(row, column, getattr(self, column), reason)

        if not 0 <= self.minute <= MAX_MINUTE:
            bad("minute", f"outside [0, {MAX_MINUTE}]")
        if self.home_away not in HOME_AWAY:
            bad("home_away", "expected home/away")
        if self.situation not in SITUATIONS:
            bad("situation", "unknown situation")
        if self.shot_type not in SHOT_TYPES:
            bad("shot_type", "unknown shot type")
        if not self.last_action:
            bad("last_action", "empty label")
        d = self.distance_to_goal
        if not (math.isfinite(d) and 0.0 <= d <= MAX_DISTANCE):
            bad("distance_to_goal", f"outside [0, {MAX_DISTANCE}]")
        a = self.angle_to_goal
        if not (math.isfinite(a) and 0.0 < a <= 180.0):
            bad("angle_to_goal", "outside (0, 180]")
        if self.is_goal and not self.on_target:
            bad("on_target", "goal must be on target")
        if self.situation == "Penalty" and not PENALTY_BAND[0] <= d <= PENALTY_BAND[1]:
            bad("distance_to_goal", "penalty taken away from the spot")
        return self


def _parse_int(token, row, column):
    try:
        return int(token)
    except ValueError:
        raise BadValue(row, column, token, "not an integer") from None


def _parse_float(token, row, column):
    try:
        value = float(token)
    except ValueError:
        raise BadValue(row, column, token, "not a number") from None
    if not math.isfinite(value):
        raise BadValue(row, column, token, "not finite")
    return value


def _parse_bool(token, row, column):
    if token not in ("0", "1"):
        raise BadValue(row, column, token, "expected 0 or 1")
    return token == "1"


def _event_from_record(rec: Dict[str, str], row: int) -> ShotEvent:
    return ShotEvent(
        match_id=rec["match_id"],
        player=rec["player"],
        team=rec["team"],
        opponent=rec["opponent"],
        season=rec["season"],
        league=rec["league"],
        minute=_parse_int(rec["minute"], row, "minute"),
        home_away=rec["home_away"],
        situation=rec["situation"],
        shot_type=rec["shot_type"],
        last_action=rec["last_action"],
        distance_to_goal=_parse_float(rec["distance_to_goal"], row, "distance_to_goal"),
        angle_to_goal=_parse_float(rec["angle_to_goal"], row, "angle_to_goal"),
        is_goal=_parse_bool(rec["is_goal"], row, "is_goal"),
        on_target=_parse_bool(rec["on_target"], row, "on_target"),
    ).validate(row)


def parse_csv(path) -> List[ShotEvent]:
    """Read shot events from ``path``.

    Row numbers in errors are 1-based data rows (the header is row 0).
    Extra columns are ignored; missing ones raise ``MissingColumn``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise EmptyFile(f"{path}: no header row")
        for name in CSV_HEADER:
            if name not in header:
                raise MissingColumn(name)
        events = []
        for row, rec in enumerate(reader, start=1):
            for name in CSV_HEADER:
                if rec.get(name) is None:
                    raise BadValue(row, name, "", "short row")
            events.append(_event_from_record(rec, row))
    return events


def write_csv(events: Iterable[ShotEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for ev in events:
            rec = asdict(ev)
            rec["is_goal"] = int(ev.is_goal)
            rec["on_target"] = int(ev.on_target)
            rec["distance_to_goal"] = repr(float(ev.distance_to_goal))
            rec["angle_to_goal"] = repr(float(ev.angle_to_goal))
            writer.writerow([rec[name] for name in CSV_HEADER])


@dataclass(frozen=True)
class FeatureEncoding:
    """Column layout of the encoded design matrix.

    ``levels`` maps each categorical feature to its ordered level tuple;
    ``OTHER`` is present (last) only when rare levels were merged.
    """

    levels: Dict[str, Tuple[str, ...]]
    rare_threshold: int = DEFAULT_RARE_THRESHOLD
    continuous: Tuple[str, ...] = CONTINUOUS
    features: Tuple[str, ...] = FEATURES

    @property
    def columns(self) -> Tuple[str, ...]:
        cols = []
        for name in self.features:
            if name in self.levels:
                cols.extend(f"{name}={lvl}" for lvl in self.levels[name])
            else:
                cols.append(name)
        return tuple(cols)

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def is_categorical(self, feature: str) -> bool:
        self._check(feature)
        return feature in self.levels

    def _check(self, feature):
        if feature not in self.features:
            raise UnknownFeature(feature)

    def feature_columns(self, feature: str) -> np.ndarray:
        """Encoded column indices belonging to ``feature``."""
        self._check(feature)
        start = 0
        for name in self.features:
            width = len(self.levels[name]) if name in self.levels else 1
            if name == feature:
                return np.arange(start, start + width)
            start += width
        raise AssertionError("unreachable")

    def level_column(self, feature: str, level: str) -> int:
        cols = self.feature_columns(feature)
        lvls = self.levels[feature]
        if level in lvls:
            return int(cols[lvls.index(level)])
        if OTHER in lvls:
            return int(cols[lvls.index(OTHER)])
        raise UnknownLevel(feature, level)

    def decode_row(self, row: Sequence[float]) -> dict:
        """Feature values of one encoded row (inverse of ``encode``)."""
        out = {}
        for name in self.features:
            cols = self.feature_columns(name)
            if name in self.levels:
                hot = np.flatnonzero(np.asarray(row)[cols] == 1.0)
                if len(hot) != 1:
                    raise ValueError(f"{name}: one-hot block has {len(hot)} active columns")
                out[name] = self.levels[name][hot[0]]
            else:
                value = float(row[cols[0]])
                out[name] = int(value) if name == "minute" else value
        return out

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "continuous": list(self.continuous),
            "levels": {k: list(v) for k, v in self.levels.items()},
            "rare_threshold": self.rare_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureEncoding":
        return cls(
            levels={k: tuple(v) for k, v in d["levels"].items()},
            rare_threshold=int(d["rare_threshold"]),
            continuous=tuple(d["continuous"]),
            features=tuple(d["features"]),
        )


def build_encoding(events: Sequence[ShotEvent], rare_threshold: int = DEFAULT_RARE_THRESHOLD) -> FeatureEncoding:
    """Derive categorical vocabularies from ``events``.

    Levels seen fewer than ``rare_threshold`` times collapse into ``OTHER``.
    Kept levels are ordered by descending frequency, ties lexicographically.
    """
    if not events:
        raise EmptyInput("cannot build an encoding from zero events")
    levels = {}
    for name in CATEGORICAL:
        counts = Counter(getattr(ev, name) for ev in events)
        kept = sorted((lvl for lvl, c in counts.items() if c >= rare_threshold),
                      key=lambda lvl: (-counts[lvl], lvl))
        if len(kept) < len(counts):
            kept.append(OTHER)
        levels[name] = tuple(kept)
    return FeatureEncoding(levels=levels, rare_threshold=rare_threshold)


@dataclass(frozen=True)
class EncodedDataset:
    X: np.ndarray
    y: np.ndarray
    z: np.ndarray
    encoding: FeatureEncoding
    meta: Dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise EmptyInput("encoded dataset needs at least one row")
        if self.X.shape[1] != self.encoding.n_columns:
            raise ValueError("matrix width does not match the encoding")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("encoded matrix contains non-finite entries")
        for arr in (self.X, self.y, self.z, *self.meta.values()):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "EncodedDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return EncodedDataset(
            X=self.X[idx].copy(), y=self.y[idx].copy(), z=self.z[idx].copy(),
            encoding=self.encoding,
            meta={k: v[idx].copy() for k, v in self.meta.items()},
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.X, self.y, self.z):
            h.update(np.ascontiguousarray(arr).tobytes())
        for key in sorted(self.meta):
            h.update("\x1f".join(self.meta[key].tolist()).encode())
        return h.hexdigest()[:16]


def encode(events: Sequence[ShotEvent], enc: FeatureEncoding) -> EncodedDataset:
    if not events:
        raise EmptyInput("cannot encode zero events")
    X = np.zeros((len(events), enc.n_columns))
    offsets = {name: enc.feature_columns(name) for name in enc.features}
    lookup = {name: {lvl: int(offsets[name][i]) for i, lvl in enumerate(enc.levels[name])}
              for name in enc.levels}
    for i, ev in enumerate(events):
        for name in enc.features:
            value = getattr(ev, name)
            if name in lookup:
                col = lookup[name].get(value)
                if col is None:
                    col = enc.level_column(name, value)
                X[i, col] = 1.0
            else:
                X[i, offsets[name][0]] = float(value)
    meta = {name: np.array([getattr(ev, name) for ev in events], dtype=object) for name in META_FIELDS}
    return EncodedDataset(
        X=X,
        y=np.array([ev.is_goal for ev in events], dtype=np.int8),
        z=np.array([ev.on_target for ev in events], dtype=np.int8),
        encoding=enc,
        meta=meta,
    )


@dataclass(frozen=True)
class GroupSelector:
    """Conjunction of equality filters over event metadata.

    With ``role="conceded"`` the ``team`` filter matches the opponent column
    (and ``opponent`` the team column), i.e. shots the team faced.
    """

    player: Optional[str] = None
    team: Optional[str] = None
    opponent: Optional[str] = None
    season: Optional[str] = None
    league: Optional[str] = None
    home_away: Optional[str] = None
    on_target: Optional[bool] = None
    role: str = "taken"

    def __post_init__(self):
        if self.role not in ("taken", "conceded"):
            raise ValueError(f"role must be 'taken' or 'conceded', got {self.role!r}")

    @classmethod
    def parse(cls, pairs: Iterable[str]) -> "GroupSelector":
        """Build a selector from ``key=value`` strings."""
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for pair in pairs:
            key, sep, value = pair.partition("=")
            key = key.strip()
            value = value.strip().strip('"').strip("'")
            if not sep or key not in known:
                raise ValueError(f"bad selector term {pair!r}")
            if key == "on_target":
                if value not in ("0", "1", "true", "false"):
                    raise ValueError(f"bad on_target value {value!r}")
                kwargs[key] = value in ("1", "true")
            else:
                kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)
                if getattr(self, f.name) is not None and not (f.name == "role" and self.role == "taken")}

    def label(self) -> str:
        d = self.to_dict()
        for key in ("player", "team"):
            if key in d:
                return d[key]
        return ",".join(f"{k}={v}" for k, v in d.items()) or "all"

    def with_role(self, role: str) -> "GroupSelector":
        return replace(self, role=role)


def select(dataset: EncodedDataset, selector: GroupSelector) -> np.ndarray:
    """Sorted row indices of ``dataset`` matching every filter in ``selector``."""
    meta = dataset.meta
    mask = np.ones(dataset.n, dtype=bool)
    team_col, opp_col = ("opponent", "team") if selector.role == "conceded" else ("team", "opponent")
    filters = [
        ("player", selector.player), (team_col, selector.team), (opp_col, selector.opponent),
        ("season", selector.season), ("league", selector.league), ("home_away", selector.home_away),
    ]
    for column, value in filters:
        if value is not None:
            mask &= meta[column] == value
    if selector.on_target is not None:
        mask &= dataset.z == int(selector.on_target)
    return np.flatnonzero(mask)


def match_split(dataset: EncodedDataset, test_percent: int = 20) -> Tuple[np.ndarray, np.ndarray]:
    """Deterministic train/test row split keyed on a hash of ``match_id``.

    All shots of one match land in the same fold.
    """
    buckets = {}
    for mid in set(dataset.meta["match_id"].tolist()):
        digest = hashlib.sha256(mid.encode("utf-8")).digest()
        buckets[mid] = int.from_bytes(digest[:8], "big") % 100
    is_test = np.array([buckets[m] < test_percent for m in dataset.meta["match_id"]])
    return np.flatnonzero(~is_test), np.flatnonzero(is_test)
