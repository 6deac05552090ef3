import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chemoflow.errors import (AbsorbingAborted, CheckpointFormatError, ConfigParseError, ConfigValidationError)
from chemoflow.grid import ScalarField, SimState, VectorField, make_grid
from chemoflow.harness.checkpoint import (VERSION, CheckpointIOError, decode_checkpoint, encode_checkpoint,
                                          read_checkpoint, write_checkpoint)
from chemoflow.harness.config import (build_forcing, config_from_dict, initial_state, load_config, parse_config,
                                      serialize)
from chemoflow.harness.convergence import convergence_study, observed_order
from chemoflow.harness.scenarios import (absorbing_experiment, run_scenario, spread_ratio, sweep, tail_maxima)

BASE = {
    "grid": {"nx": 8, "ny": 8},
    "params": {"r": 1.0, "mu": 1.0, "alpha": 1.0, "beta": 1.0, "chi": 1.0, "k": 0.5, "eta": 0.5},
}


def small(**sections):
    data = {k: dict(v) for k, v in BASE.items()}
    for k, v in sections.items():
        data.setdefault(k, {}).update(v)
    data.setdefault("run", {}).setdefault("t_end", 0.2)
    data["run"].setdefault("snapshot_interval", 0.05)
    return config_from_dict(data)


# --- configuration ---------------------------------------------------------

def test_minimal_config_gets_defaults():
    cfg = config_from_dict(BASE)
    assert cfg.initial.preset == "gaussian_bump"
    assert cfg.potential.preset == "constant" and cfg.forcing.preset == "zero"
    assert cfg.solver.preconditioner == "spectral"


def test_shipped_configs_load():
    for name in ("bounded_64", "mass_dynamics"):
        cfg = load_config(f"configs/{name}.toml")
        assert cfg.run.name == name


def test_parse_error_reports_line():
    with pytest.raises(ConfigParseError) as info:
        parse_config("[grid]\nnx = 8\nny = = 8\n")
    assert info.value.line == 3


@pytest.mark.parametrize("section,key,value", [
    ("grid", "nx", 2), ("params", "k", 1.0), ("params", "eta", 0.0), ("params", "mu", -1.0),
    ("initial", "c0", 0.0), ("run", "t_end", -1.0), ("grid", "nz", 4), ("params", "chi", "one"),
])
def test_validation_errors(section, key, value):
    data = {k: dict(v) for k, v in BASE.items()}
    data.setdefault(section, {})[key] = value
    with pytest.raises(ConfigValidationError):
        config_from_dict(data)


def test_unknown_section_and_preset():
    with pytest.raises(ConfigValidationError):
        config_from_dict(dict(BASE, output={}))
    with pytest.raises(ConfigValidationError):
        config_from_dict(dict(BASE, initial={"preset": "sawtooth"}))
    with pytest.raises(ConfigValidationError):
        config_from_dict(dict(BASE, initial={"preset": "uniform", "amplitude": 1.0}))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["uniform", "gaussian_bump", "random_perturbed", "checker"]),
       st.sampled_from(["constant", "linear_gravity", "bump"]), st.sampled_from(["zero", "oscillatory"]),
       st.floats(0.1, 10), st.integers(4, 64))
def test_serialize_round_trip(ini, pot, force, scale, nx):
    cfg = config_from_dict({"grid": {"nx": nx, "ny": 4}, "params": BASE["params"],
                            "initial": {"preset": ini, "scale": scale}, "potential": {"preset": pot},
                            "forcing": {"preset": force}})
    assert parse_config(serialize(cfg)) == cfg


@pytest.mark.parametrize("preset", ["uniform", "gaussian_bump", "random_perturbed", "checker"])
def test_initial_presets_are_admissible(preset):
    cfg = small(initial={"preset": preset})
    s = initial_state(cfg)
    assert s.n.data.min() >= 0 and s.n.data.max() > 0 and s.c.data.min() > 0
    assert s.t == 0.0 and s.u.max_abs() == 0.0


def test_scale_multiplies_both_fields():
    cfg = small(initial={"preset": "gaussian_bump"})
    a, b = initial_state(cfg), initial_state(cfg.with_scale(5.0))
    np.testing.assert_allclose(b.n.data, 5 * a.n.data)
    np.testing.assert_allclose(b.c.data, 5 * a.c.data)


def test_random_preset_is_seeded():
    cfg = small(initial={"preset": "random_perturbed", "seed": 7})
    np.testing.assert_array_equal(initial_state(cfg).n.data, initial_state(cfg).n.data)
    other = small(initial={"preset": "random_perturbed", "seed": 8})
    assert not np.array_equal(initial_state(cfg).n.data, initial_state(other).n.data)


def test_oscillatory_forcing_bounded_by_amplitude():
    cfg = small(forcing={"preset": "oscillatory", "amplitude": 0.3, "frequency": 2.0})
    f = build_forcing(cfg)
    assert 0.0 < f.sup_norm(1.0, samples=33) <= 0.3 + 1e-12
    assert f.faces(0.0)[0].max() == 0.0


def test_gravity_potential_is_linear():
    f = build_forcing(small(potential={"preset": "linear_gravity", "g": 2.0}))
    y = make_grid(8, 8, 1.0, 1.0).cell_centers()[1]
    np.testing.assert_allclose(f.phi.data, 2.0 * y)


# --- checkpoints -----------------------------------------------------------

def random_state(rng):
    g = make_grid(5, 4, 1.5, 1.0)
    return SimState(0.123456789, ScalarField(g, rng.random((5, 4))), ScalarField(g, rng.random((5, 4)) + 1),
                    VectorField(g, rng.normal(size=(6, 4)), rng.normal(size=(5, 5))))


def test_checkpoint_round_trip_is_exact(tmp_path, rng):
    s = random_state(rng)
    path = write_checkpoint(s, tmp_path / "a.ckpt")
    assert read_checkpoint(path) == s
    assert encode_checkpoint(read_checkpoint(path)) == path.read_bytes()


def test_checkpoint_header_layout(rng):
    blob = encode_checkpoint(random_state(rng))
    magic, version, nx, ny, lx, ly, t = struct.unpack_from("<5sIIIddd", blob)
    assert (magic, version, nx, ny, lx, ly) == (b"CFSIM", VERSION, 5, 4, 1.5, 1.0)
    assert len(blob) == struct.calcsize("<5sIIIddd") + 8 * (20 + 20 + 24 + 25)


def test_checkpoint_rejects_truncation_and_version(rng):
    blob = encode_checkpoint(random_state(rng))
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(blob[:-8])
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(blob[:10])
    bumped = blob[:5] + struct.pack("<I", VERSION + 1) + blob[9:]
    with pytest.raises(CheckpointFormatError, match=rf"{VERSION + 1}.*{VERSION}"):
        decode_checkpoint(bumped)
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(b"XXXXX" + blob[5:])


def test_checkpoint_missing_file(tmp_path):
    with pytest.raises(CheckpointIOError):
        read_checkpoint(tmp_path / "missing.ckpt")


# --- scenarios -------------------------------------------------------------

def test_run_lands_on_snapshot_times(tmp_path):
    cfg = small(potential={"preset": "linear_gravity"}, forcing={"preset": "oscillatory"},
                run={"checkpoint_interval": 0.1, "name": "s"})
    res = run_scenario(cfg, tmp_path)
    t = res.column("t")
    np.testing.assert_allclose(t, np.arange(5) * 0.05, atol=1e-12)
    assert np.all(np.diff(t) > 0)
    assert res.final_state.t == 0.2
    assert not res.summary.blowup and res.summary.clamp_activations == 0
    assert sorted(p.name for p in tmp_path.glob("*.ckpt")) == ["s.ckpt", "s_t0.1.ckpt", "s_t0.2.ckpt"]
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "t" and len(header.split(",")) == 18


def test_csv_uses_round_trip_precision(tmp_path):
    res = run_scenario(small(run={"name": "p"}), tmp_path)
    row = (tmp_path / "p.csv").read_text().splitlines()[2].split(",")
    assert float(row[1]) == res.records[1].mass_n


def test_blowup_is_flagged_not_raised(tmp_path):
    cfg = small(initial={"preset": "uniform", "n0": 5.0}, step={"overflow_guard": 2.0}, run={"name": "b"})
    res = run_scenario(cfg, tmp_path)
    assert res.summary.blowup and "Blowup" in res.summary.blowup_reason
    assert (tmp_path / "b.csv").exists()


def test_spread_ratio_cases():
    assert spread_ratio([2.0, 2.0, 2.0]) == 1.0
    assert spread_ratio([1.0, 3.0, 2.0]) == 3.0
    assert spread_ratio([0.0, 1.0]) == math.inf


def test_absorbing_identical_scales_have_unit_spread(tmp_path):
    rep = absorbing_experiment(small(), [1.0, 1.0, 1.0], tmp_path)
    assert all(v == 1.0 for v in rep.spreads.values()) and rep.passed


def test_absorbing_is_permutation_invariant(tmp_path):
    cfg = small(run={"t_end": 0.1})
    a = absorbing_experiment(cfg, [0.5, 1.0, 2.0], tmp_path, write=False)
    b = absorbing_experiment(cfg, [2.0, 0.5, 1.0], tmp_path, write=False)
    assert a.spreads == b.spreads


def test_absorbing_input_checks(tmp_path):
    with pytest.raises(ConfigValidationError):
        absorbing_experiment(small(), [1.0, 2.0], tmp_path)
    with pytest.raises(ConfigValidationError):
        absorbing_experiment(small(), [1.0, 2.0, -1.0], tmp_path)
    blow = small(initial={"preset": "uniform", "n0": 1.0}, step={"overflow_guard": 20.0})
    with pytest.raises(AbsorbingAborted):
        absorbing_experiment(blow, [1.0, 10.0, 100.0], tmp_path, write=False)


def test_sweep_accepts_values_outside_hypothesis(tmp_path):
    rows = sweep(small(run={"t_end": 0.1, "name": "w"}), "k", [0.5, 1.2], tmp_path)
    assert [r["in_hypothesis"] for r in rows] == [True, False]
    assert all(not r["blowup"] for r in rows)
    assert (tmp_path / "w_sweep_k.csv").exists()
    with pytest.raises(ConfigValidationError):
        sweep(small(), "gamma", [1.0], tmp_path)


def test_tail_maxima_uses_last_fraction(tmp_path):
    res = run_scenario(small(run={"t_end": 1.0, "snapshot_interval": 0.1}), write=False)
    tails = tail_maxima(res, 0.2)
    mask = res.column("t") >= 0.8 - 1e-12
    assert tails["max_n"] == res.column("max_n")[mask].max()


# --- convergence -----------------------------------------------------------

def test_observed_order_of_exact_power_law():
    h = np.array([0.1, 0.05, 0.025])
    assert observed_order(h, 3 * h**2) == pytest.approx(2.0)


def test_repeated_levels_flag_degenerate():
    rep = convergence_study("diffusion", [8, 8])
    assert rep.degenerate and not rep.passed


def test_diffusion_study_on_coarse_levels():
    rep = convergence_study("diffusion", [8, 16, 32])
    assert rep.composite_order > 1.8
