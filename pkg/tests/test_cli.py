import pytest

from chemoflow.cli import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK, main

CONFIG = """
[grid]
nx = 8
ny = 8
[params]
r = 1.0
mu = 1.0
alpha = 1.0
beta = 1.0
chi = 1.0
k = 0.5
eta = 0.5
[potential]
preset = "linear_gravity"
[run]
t_end = 0.2
snapshot_interval = 0.05
name = "cli"
"""


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text(CONFIG)
    return p


def test_run_check_report(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config), "--out-dir", str(out)]) == EXIT_OK
    assert (out / "cli.csv").exists()
    assert main(["check", str(out / "cli.ckpt")]) == EXIT_OK
    assert main(["report", str(out)]) == EXIT_OK
    assert (out / "verdicts.csv").exists()
    assert "bounded:max_n" in capsys.readouterr().out


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(CONFIG.replace("k = 0.5", "k = 1.5"))
    assert main(["run", str(bad)]) == EXIT_INVALID
    assert "k" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid\nnx = 8")
    assert main(["run", str(bad)]) == EXIT_INVALID


def test_blowup_exit_code(config, tmp_path):
    text = config.read_text() + "[step]\noverflow_guard = 0.5\n"
    config.write_text(text.replace('[potential]', '[initial]\npreset = "uniform"\nn0 = 5.0\n[potential]'))
    assert main(["run", str(config), "--out-dir", str(tmp_path / "o")]) == EXIT_BLOWUP


def test_corrupt_checkpoint_exit_code(tmp_path):
    f = tmp_path / "x.ckpt"
    f.write_bytes(b"CFSIM\x00")
    assert main(["check", str(f)]) == EXIT_INVALID


def test_absorbing_and_sweep(config, tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["absorbing", str(config), "--scales", "0.5,1,5", "--out-dir", out, "--t-end", "0.1"]) == EXIT_OK
    assert main(["sweep", str(config), "--param", "eta", "--values", "0.5,1.0", "--out-dir", out,
                 "--t-end", "0.1", "--seed", "3"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "spread max_n" in text and "outside hypothesis" in text


def test_converge_flags_degenerate_levels(config):
    assert main(["converge", str(config), "--levels", "8,8", "--study", "diffusion"]) == EXIT_INVALID


def test_lemmas_small(capsys):
    assert main(["lemmas", "--instances", "5", "--young-samples", "1000"]) == EXIT_OK
    assert capsys.readouterr().out.count("[PASS]") == 4


def test_report_empty_dir(tmp_path):
    assert main(["report", str(tmp_path)]) == EXIT_INVALID
