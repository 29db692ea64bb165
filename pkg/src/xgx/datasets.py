"""Seeded synthetic shot corpora.

``fixture_corpus`` builds a small multi-league event table whose named
groups carry fixed shot/goal counts (young forwards in 2022/23, goals
conceded on target by three clubs). ``synthetic_shots`` draws an
unstructured sample of any size from the same ground-truth goal model.
"""
from __future__ import annotations

from itertools import permutations

import numpy as np

from .events import ShotEvent

# (player, team, league, shots, goals), season 2022/23
YOUNG_FORWARDS = (
    ("Youssoufa Moukoko", "Borussia Dortmund", "Bundesliga", 35, 7),
    ("Alejandro Garnacho", "Manchester United", "EPL", 24, 3),
    ("Mathys Tel", "Bayern Munich", "Bundesliga", 20, 5),
    ("Jamie Bynoe-Gittens", "Borussia Dortmund", "Bundesliga", 24, 3),
    ("Evan Ferguson", "Brighton & Hove Albion", "EPL", 36, 6),
)

# (goalkeeper, team, league, goals conceded), season 2022/23
GOALKEEPERS = (
    ("Marvin Schwabe", "FC Köln", "Bundesliga", 54),
    ("Alex Remino", "RCD Espanyol", "La Liga", 69),
    ("David Raya", "Brentford FC", "EPL", 46),
)

LAST_ACTIONS = (
    ("Pass", 0.30), ("Cross", 0.14), ("None", 0.09), ("Rebound", 0.06),
    ("HeadPass", 0.05), ("TakeOn", 0.05), ("BallRecovery", 0.04), ("Throughball", 0.04),
    ("Chipped", 0.03), ("Aerial", 0.03), ("Standard", 0.025), ("LayOff", 0.02),
    ("BallTouch", 0.02), ("Tackle", 0.015), ("Dispossessed", 0.012), ("Interception", 0.01),
    ("Foul", 0.01), ("Clearance", 0.008), ("CornerAwarded", 0.007), ("Goal", 0.006),
    ("BlockedPass", 0.005), ("KeeperPickup", 0.004), ("Save", 0.004), ("OffsidePass", 0.003),
    ("Challenge", 0.003), ("ShieldBallOpp", 0.0025), ("CrossNotClaimed", 0.002), ("Punch", 0.002),
    ("Smother", 0.0015), ("Card", 0.0012), ("OffsideProvoked", 0.001), ("Error", 0.001),
    ("SubstitutionOn", 0.0008), ("Claim", 0.0007), ("GoodSkill", 0.0006), ("KeeperSweeper", 0.0005),
    ("FormationChange", 0.0004), ("End", 0.0003), ("ChanceMissed", 0.0002),
)

_SITUATIONS = (("OpenPlay", 0.72), ("FromCorner", 0.12), ("SetPiece", 0.08),
               ("DirectFreekick", 0.05), ("Penalty", 0.03))
_SITUATION_EFFECT = {"OpenPlay": 0.0, "FromCorner": -0.3, "SetPiece": -0.15, "DirectFreekick": -0.4}
_SHOT_EFFECT = {"Head": -0.7, "LeftFoot": -0.05, "RightFoot": 0.0, "OtherBodyPart": -0.5}
_ACTION_EFFECT = {"Throughball": 0.6, "Rebound": 0.35, "TakeOn": 0.2, "Cross": -0.25,
                  "HeadPass": -0.1, "Chipped": 0.25, "None": -0.15, "Aerial": -0.2}
PENALTY_LOGIT = 1.15

_FILLERS = {
    "Bundesliga": ("RB Leipzig", "SC Freiburg", "Union Berlin", "VfL Wolfsburg", "Mainz 05"),
    "EPL": ("Arsenal", "Liverpool", "Newcastle United", "Fulham", "Aston Villa"),
    "La Liga": ("Real Madrid", "Barcelona", "Sevilla", "Villarreal", "Real Betis",
                "Osasuna", "Getafe"),
    "Serie A": ("Inter", "AC Milan", "Juventus", "AS Roma", "Lazio", "Atalanta", "Fiorentina"),
    "Ligue 1": ("Paris SG", "Marseille", "Monaco", "Lyon", "Rennes", "Nice", "Lens"),
}
_SEASON_TEAMS = {
    ("Bundesliga", "2022/23"): ("Borussia Dortmund", "Bayern Munich", "FC Köln"),
    ("EPL", "2022/23"): ("Manchester United", "Brighton & Hove Albion", "Brentford FC"),
    ("La Liga", "2022/23"): ("RCD Espanyol",),
    ("Serie A", "2022/23"): ("SSC Napoli",),
    ("Serie A", "2021/22"): ("SSC Napoli",),
    ("Ligue 1", "2021/22"): ("Lille OSC",),
    ("Ligue 1", "2020/21"): ("Lille OSC",),
}
_TEAMS_PER_LEAGUE = 8


def _choice(rng, table, size):
    names = [t[0] for t in table]
    w = np.array([t[1] for t in table], dtype=float)
    return np.array(names, dtype=object)[rng.choice(len(names), size=size, p=w / w.sum())]


def sample_shot_features(rng: np.random.Generator, n: int) -> dict:
    """Draw raw shot features: location-derived distance/angle plus context."""
    situation = _choice(rng, _SITUATIONS, n)
    shot_type = _choice(rng, (("RightFoot", 0.5), ("LeftFoot", 0.3), ("Head", 0.17),
                              ("OtherBodyPart", 0.03)), n)
    last_action = _choice(rng, LAST_ACTIONS, n)
    depth = 1.0 + rng.gamma(2.2, 6.0, n)
    lateral = rng.normal(0.0, 7.0, n)
    head = shot_type == "Head"
    depth[head] = 1.0 + rng.gamma(2.0, 2.5, head.sum())
    fk = situation == "DirectFreekick"
    depth[fk] = rng.uniform(16.0, 32.0, fk.sum())
    lateral = np.clip(lateral, -30.0, 30.0)
    depth = np.clip(depth, 0.5, 60.0)
    pen = situation == "Penalty"
    depth[pen] = rng.uniform(10.8, 11.2, pen.sum())
    lateral[pen] = 0.0
    shot_type[pen & head] = "RightFoot"
    last_action[pen] = "Standard"
    distance = np.round(np.hypot(depth, lateral), 2)
    angle = np.round(np.degrees(np.arctan2(depth, np.abs(lateral))), 2)
    angle = np.clip(angle, 0.5, 180.0)
    distance = np.clip(distance, 0.5, 120.0)
    distance[pen] = np.clip(distance[pen], 10.5, 11.5)
    return {
        "minute": rng.integers(1, 96, n),
        "home_away": np.where(rng.random(n) < 0.53, "home", "away").astype(object),
        "situation": situation,
        "shot_type": shot_type,
        "last_action": last_action,
        "distance_to_goal": distance,
        "angle_to_goal": angle,
    }


def goal_logit(f: dict) -> np.ndarray:
    """Ground-truth log-odds of scoring used by every generator."""
    z = (-0.8 - 0.19 * f["distance_to_goal"] + 0.025 * f["angle_to_goal"]
         + 0.002 * (f["minute"] - 45) + np.where(f["home_away"] == "home", 0.05, 0.0))
    z = z + np.array([_SITUATION_EFFECT.get(s, 0.0) for s in f["situation"]])
    z = z + np.array([_SHOT_EFFECT[s] for s in f["shot_type"]])
    z = z + np.array([_ACTION_EFFECT.get(a, 0.0) for a in f["last_action"]])
    return np.where(f["situation"] == "Penalty", PENALTY_LOGIT, z)


def goal_probability(f: dict) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-goal_logit(f)))


def _on_target(rng, is_goal):
    return is_goal | (rng.random(is_goal.size) < 0.22)


def _events(f, meta, is_goal, on_target):
    out = []
    for i in range(len(is_goal)):
        out.append(ShotEvent(
            match_id=meta["match_id"][i], player=meta["player"][i], team=meta["team"][i],
            opponent=meta["opponent"][i], season=meta["season"][i], league=meta["league"][i],
            minute=int(f["minute"][i]), home_away=str(f["home_away"][i]),
            situation=str(f["situation"][i]), shot_type=str(f["shot_type"][i]),
            last_action=str(f["last_action"][i]),
            distance_to_goal=float(f["distance_to_goal"][i]),
            angle_to_goal=float(f["angle_to_goal"][i]),
            is_goal=bool(is_goal[i]), on_target=bool(on_target[i]),
        ))
    return out


def synthetic_shots(n: int, seed: int = 0, shots_per_match: int = 25):
    """``n`` independent shots with Bernoulli goals from ``goal_probability``."""
    rng = np.random.default_rng(seed)
    f = sample_shot_features(rng, n)
    p = goal_probability(f)
    is_goal = rng.random(n) < p
    on_target = _on_target(rng, is_goal)
    match = np.arange(n) // shots_per_match
    mids = np.array([f"s{m:06d}" for m in match], dtype=object)
    # 20 clubs; the away side is always a different club from the home side
    home = np.array([f"Team {(m * 3) % 20:02d}" for m in match], dtype=object)
    away = np.array([f"Team {(m * 3 + 1 + m % 19) % 20:02d}" for m in match], dtype=object)
    at_home = f["home_away"] == "home"
    meta = {
        "match_id": mids, "player": np.array([f"Player {i % 97:02d}" for i in range(n)], dtype=object),
        "team": np.where(at_home, home, away), "opponent": np.where(at_home, away, home),
        "season": np.where(match % 2 == 0, "2021/22", "2022/23").astype(object),
        "league": np.array(["Synthetic"] * n, dtype=object),
    }
    return _events(f, meta, is_goal, on_target)


def _exact_goals(rng, p, k):
    """Pick exactly ``k`` goals among candidates, weighted by ``p``."""
    goals = np.zeros(p.size, dtype=bool)
    if k:
        goals[rng.choice(p.size, size=k, replace=False, p=p / p.sum())] = True
    return goals


def fixture_corpus(seed: int = 2023):
    """Multi-league fixture event list with the named groups' exact counts."""
    rng = np.random.default_rng(seed)
    keeper_goals = {team: goals for _, team, _, goals in GOALKEEPERS}
    forwards = {}
    for player, team, _, shots, goals in YOUNG_FORWARDS:
        forwards.setdefault(team, []).append((player, shots, goals))

    rows = []  # (match_id, team, opponent, season, league, home_away)
    for (league, season) in sorted(set(_SEASON_TEAMS) | {(lg, "2022/23") for lg in _FILLERS}):
        named = _SEASON_TEAMS.get((league, season), ())
        teams = list(named) + list(_FILLERS[league][: _TEAMS_PER_LEAGUE - len(named)])
        for k, (home, away) in enumerate(permutations(teams, 2)):
            mid = f"{league[:3].upper()}-{season[:4]}-{k:03d}"
            for team, opp, side in ((home, away, "home"), (away, home, "away")):
                rate = 20 if opp in keeper_goals and season == "2022/23" else 13
                rows.extend([(mid, team, opp, season, league, side)] * int(rng.poisson(rate)))

    n = len(rows)
    f = sample_shot_features(rng, n)
    meta = {key: np.array([r[i] for r in rows], dtype=object)
            for i, key in enumerate(("match_id", "team", "opponent", "season", "league"))}
    f["home_away"] = np.array([r[5] for r in rows], dtype=object)
    player = np.array([f"{t} #{int(rng.integers(2, 12))}" for t in meta["team"]], dtype=object)

    for team, roster in forwards.items():
        eligible = np.flatnonzero((meta["team"] == team) & (meta["season"] == "2022/23")
                                  & ~np.isin(meta["opponent"], list(keeper_goals)))
        picks = rng.permutation(eligible)
        start = 0
        for name, shots, _ in roster:
            player[np.sort(picks[start:start + shots])] = name
            start += shots
    meta["player"] = player

    p = goal_probability(f)
    is_goal = rng.random(n) < p
    on_target = _on_target(rng, is_goal)
    for team, roster in forwards.items():
        for name, _, goals in roster:
            idx = np.flatnonzero(player == name)
            is_goal[idx] = _exact_goals(rng, p[idx], goals)
            on_target[idx] = _on_target(rng, is_goal[idx])
    for team, goals in keeper_goals.items():
        faced = np.flatnonzero((meta["opponent"] == team) & (meta["season"] == "2022/23"))
        on_target[faced] = rng.random(faced.size) < 0.42
        idx = faced[on_target[faced]]
        is_goal[faced] = False
        is_goal[idx] = _exact_goals(rng, p[idx], goals)
    return _events(f, meta, is_goal, on_target)
