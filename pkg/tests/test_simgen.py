"""Config validation, scheduling, equilibrium solving, and generation."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import oracle_duo_closed_form, oracle_equilibrium
from hypothesis import given, settings
from hypothesis import strategies as st

from peerfx.errors import ConfigError, InfeasibleConfig, SingularSystem
from peerfx.panel import TEAM_SIZE, build_panel
from peerfx.simgen import (
    GroundTruth,
    SimConfig,
    generate_panel,
    party_table,
    player_alphas,
    simulate_schedule,
    solve_team_equilibrium,
)


def cfg(**kw):
    base = dict(
        n_players=40,
        matches_per_player=6.0,
        mode_weights={"duos": 1.0},
        alpha_mean=0.5,
        alpha_sd=0.1,
        idio_sd=0.1,
        common_shock_sd=0.0,
        outcome="linear_latent",
        seed=99,
    )
    base.update(kw)
    return SimConfig(**base)


# -- config ------------------------------------------------------------------


def test_beta_out_of_unit_interval_rejected():
    for bad in (1.0, 1.2, -1.0, -3.0):
        with pytest.raises(SingularSystem):
            cfg(beta_true=bad)


@pytest.mark.parametrize(
    "field, value",
    [
        ("n_players", 0),
        ("matches_per_player", -1.0),
        ("mode_weights", {"duos": -0.5}),
        ("mode_weights", {"duos": 0.0}),
        ("mode_weights", {"squads": 1.0}),
        ("mode_weights", {}),
        ("alpha_sd", -0.1),
        ("idio_sd", -0.1),
        ("common_shock_sd", -0.1),
        ("party_share", 1.5),
        ("homophily", -0.2),
        ("outcome", "probit"),
        ("seed", -1),
        ("seed", 2**64),
        ("teams_per_match", 0),
    ],
)
def test_invalid_fields_rejected(field, value):
    with pytest.raises(ConfigError):
        cfg(**{field: value})


def test_json_round_trip_and_unknown_fields():
    config = cfg(party_share=0.25, homophily=0.5)
    assert SimConfig.from_json(config.to_json()) == config
    with pytest.raises(ConfigError, match="unknown config fields"):
        SimConfig.from_json('{"players": 10}')
    with pytest.raises(ConfigError, match="not valid JSON"):
        SimConfig.from_json("{nope")


# -- schedule ----------------------------------------------------------------


def test_zero_matches_gives_empty_schedule():
    assert simulate_schedule(cfg(matches_per_player=0.0)) == []
    records, truth = generate_panel(cfg(matches_per_player=0.0))
    assert records == []
    assert truth.row_eps.size == 0


def test_schedule_is_deterministic():
    config = cfg(party_share=0.4, homophily=0.3, seed=314)
    assert simulate_schedule(config) == simulate_schedule(config)


def test_schedule_shape_and_no_repeats():
    config = cfg(n_players=30, mode_weights={"duos": 1.0, "trios": 1.0, "quads": 1.0})
    schedule = simulate_schedule(config)
    assert schedule
    total_slots = 0
    for roster in schedule:
        size = TEAM_SIZE[roster.mode]
        seen: set[int] = set()
        for t in roster.teams:
            assert len(t.players) == size
            seen.update(t.players)
        assert len(seen) == sum(len(t.players) for t in roster.teams)
        total_slots += len(seen)
    target = config.n_players * config.matches_per_player
    assert target <= total_slots <= target + 2 * 4


def test_party_share_zero_means_all_algorithmic():
    schedule = simulate_schedule(cfg(party_share=0.0, seed=5))
    assert all(t.party is None for roster in schedule for t in roster.teams)


def test_degenerate_two_player_party():
    config = cfg(n_players=2, matches_per_player=5.0, party_share=1.0, seed=1)
    schedule = simulate_schedule(config)
    assert len(schedule) == 5  # 10 slots at one duo team per match
    for roster in schedule:
        assert len(roster.teams) == 1
        assert roster.teams[0].party == 0
        assert sorted(roster.teams[0].players) == sorted(party_table(config)[0].tolist())


def test_infeasible_population():
    with pytest.raises(InfeasibleConfig):
        simulate_schedule(cfg(n_players=3, mode_weights={"quads": 1.0}))


def test_party_teams_recur_at_about_party_share():
    config = cfg(n_players=200, matches_per_player=30.0, party_share=0.5, seed=8)
    schedule = simulate_schedule(config)
    teams = [t for roster in schedule for t in roster.teams]
    share = sum(t.party is not None for t in teams) / len(teams)
    assert 0.4 < share < 0.6
    # premade pairs really are the assigned parties
    parties = party_table(config)
    for t in teams:
        if t.party is not None:
            assert sorted(t.players) == sorted(parties[t.party].tolist())


# -- equilibrium -------------------------------------------------------------


def test_beta_zero_is_identity():
    a = np.array([0.3, -1.2, 0.8])
    assert np.array_equal(solve_team_equilibrium(a, 0.0), a)


def test_duo_half_beta_example():
    out = solve_team_equilibrium(np.array([1.0, 0.0]), 0.5)
    assert out == pytest.approx([4 / 3, 2 / 3], abs=1e-12)


def test_quad_symmetric_inputs():
    out = solve_team_equilibrium(np.full(4, 0.2), 0.5)
    assert out == pytest.approx([0.4, 0.4, 0.4, 0.4], abs=1e-12)


def test_solver_rejects_singular_and_short_inputs():
    with pytest.raises(SingularSystem):
        solve_team_equilibrium(np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        solve_team_equilibrium(np.zeros(1), 0.3)


@given(
    st.integers(2, 4),
    st.floats(-0.9, 0.9),
    st.integers(0, 10_000),
)
@settings(max_examples=120, deadline=None)
def test_structural_residuals_vanish(m, beta, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=2.0, size=m)
    y = solve_team_equilibrium(a, beta)
    for i in range(m):
        peers = (y.sum() - y[i]) / (m - 1)
        assert abs(y[i] - a[i] - beta * peers) < 1e-10
    assert y == pytest.approx(oracle_equilibrium(a, beta), abs=1e-10)


@given(st.floats(-0.9, 0.9), st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_duo_closed_form_matches_general_solver(beta, seed):
    rng = np.random.default_rng(seed)
    a1, a2 = rng.normal(size=2)
    got = solve_team_equilibrium(np.array([a1, a2]), beta)
    want = oracle_duo_closed_form(a1, a2, beta)
    assert abs(got[0] - want[0]) < 1e-12
    assert abs(got[1] - want[1]) < 1e-12


# -- generation --------------------------------------------------------------


def test_double_run_is_identical():
    config = cfg(party_share=0.3, homophily=0.4, common_shock_sd=0.05, seed=77)
    a_records, a_truth = generate_panel(config)
    b_records, b_truth = generate_panel(config)
    assert a_records == b_records
    assert np.array_equal(a_truth.row_eps, b_truth.row_eps)
    assert np.array_equal(a_truth.alpha, b_truth.alpha)


def test_worker_count_does_not_change_output():
    config = cfg(n_players=80, matches_per_player=30.0, common_shock_sd=0.05, seed=13)
    serial_records, serial_truth = generate_panel(config, workers=1)
    threaded_records, threaded_truth = generate_panel(config, workers=3)
    assert serial_records == threaded_records
    assert np.array_equal(serial_truth.row_latent, threaded_truth.row_latent)


def test_bernoulli_mean_within_three_sigma():
    config = cfg(
        n_players=300,
        matches_per_player=10.0,
        beta_true=0.0,
        alpha_mean=0.3,
        alpha_sd=0.0,
        idio_sd=0.0,
        common_shock_sd=0.0,
        outcome="binary",
        seed=21,
    )
    records, _ = generate_panel(config)
    ys = np.array([r.y for r in records])
    assert set(ys.tolist()) <= {0.0, 1.0}
    sigma = np.sqrt(0.3 * 0.7 / ys.size)
    assert abs(ys.mean() - 0.3) < 3 * sigma


def test_latent_at_or_above_one_is_certain():
    config = cfg(
        beta_true=0.0, alpha_mean=1.5, alpha_sd=0.0, idio_sd=0.0, outcome="binary", seed=3
    )
    records, truth = generate_panel(config)
    assert np.all(truth.row_latent >= 1.0)
    assert all(r.y == 1.0 for r in records)


def test_common_shock_correlates_teammate_errors():
    config = cfg(
        n_players=2000,
        matches_per_player=12.0,
        idio_sd=0.1,
        common_shock_sd=0.1,
        seed=15,
    )
    _, truth = generate_panel(config)
    eps = truth.row_eps.reshape(-1, 2)  # duos rows are team-contiguous
    assert eps.shape[0] >= 10_000
    corr = np.corrcoef(eps[:, 0], eps[:, 1])[0, 1]
    assert corr > 0.3  # theory: 0.5 at equal sds

    _, no_shock = generate_panel(cfg(n_players=2000, matches_per_player=12.0, seed=15))
    eps0 = no_shock.row_eps.reshape(-1, 2)
    assert abs(np.corrcoef(eps0[:, 0], eps0[:, 1])[0, 1]) < 0.05


def test_homophily_correlates_party_alphas():
    config = cfg(n_players=4000, party_share=0.8, homophily=0.6, seed=23)
    parties = party_table(config)
    alpha = player_alphas(config)
    pair = alpha[parties]
    corr = np.corrcoef(pair[:, 0], pair[:, 1])[0, 1]
    assert 0.4 < corr < 0.8

    flat = cfg(n_players=4000, party_share=0.8, homophily=0.0, seed=23)
    pair0 = player_alphas(flat)[party_table(flat)]
    corr0 = np.corrcoef(pair0[:, 0], pair0[:, 1])[0, 1]
    assert abs(corr0) < 4 / np.sqrt(parties.shape[0])


def test_records_satisfy_structural_equations():
    config = cfg(beta_true=0.4, common_shock_sd=0.05, seed=31)
    records, truth = generate_panel(config)
    assert [r.y for r in records] == truth.row_latent.tolist()
    a = truth.alpha[truth.row_player] + truth.row_eps
    y = truth.row_latent.reshape(-1, 2)
    a2 = a.reshape(-1, 2)
    resid = y - a2 - config.beta_true * y[:, ::-1]
    assert np.max(np.abs(resid)) < 1e-10


def test_party_ids_present_only_on_premade_rows():
    config = cfg(n_players=60, party_share=0.5, seed=41)
    records, _ = generate_panel(config)
    schedule = simulate_schedule(config)
    premade_teams = {
        (f"m{roster.index}", t.party)
        for roster in schedule
        for t in roster.teams
        if t.party is not None
    }
    tagged = {(r.match_id, int(r.party_id[1:])) for r in records if r.party_id}
    assert tagged == premade_teams
    panel = build_panel(records, binary=False)
    assert panel.has_party_metadata() is bool(premade_teams)


def test_ground_truth_json_shape():
    records, truth = generate_panel(cfg(n_players=6, matches_per_player=2.0, seed=2))
    import json

    blob = json.loads(truth.to_json())
    assert blob["beta_true"] == 0.3
    assert len(blob["rows"]["player_id"]) == len(records)
    assert set(blob["alpha"]) == {f"p{j}" for j in range(6)}
    assert isinstance(truth, GroundTruth)
