import csv
import json
import math
from pathlib import Path

import pytest

from stickbreak.cli import main, parse_config, run_job, serialize_config
from stickbreak.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
job: sample
model: {kind: BrownianDrift, sigma: 1.0}
seed: 3
params: {n: 4, N: 50}
"""

NIG3 = """
model: {kind: NIG, sigma: 0.1836, theta: -0.1313, kappa: 1.2819, b: 0.1571}
payoff: {kind: up_and_out_call, S0: 100.0, K0: 100.0, M: 115.0, r: 0.05}
"""


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_round_trip():
    cfg = parse_config(MINIMAL)
    assert parse_config(serialize_config(cfg)) == cfg


def test_negative_sigma_is_path_qualified():
    with pytest.raises(ConfigError, match=r"model\.BrownianDrift\.sigma"):
        parse_config("model: {kind: BrownianDrift, sigma: -1.0}")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match=r"params\.bogus"):
        parse_config(MINIMAL.replace("N: 50}", "N: 50, bogus: 1}"))


def test_malformed_and_domain_errors():
    with pytest.raises(ConfigError, match="<document>"):
        parse_config("model: [unclosed")
    with pytest.raises(ConfigError, match="payoff"):
        parse_config("model: {kind: BrownianDrift, sigma: 1.0}\npayoff: {kind: up_and_out_call, S0: 2.0, M: 1.0}")
    with pytest.raises(ConfigError, match="kappa"):
        parse_config("model: {kind: NIG, sigma: 1.0, kappa: 0.0}")


def test_shipped_figure3_config():
    cfg = parse_config((CONFIGS / "figure3.yaml").read_text())
    m = cfg.model
    assert (m.kind, m.sigma, m.theta, m.kappa, m.b) == ("NIG", 0.1836, -0.1313, 1.2819, 0.1571)
    assert (cfg.payoff.S0, cfg.payoff.K0, cfg.payoff.M, cfg.payoff.r) == (100.0, 100.0, 115.0, 0.05)


@pytest.mark.parametrize("name", ["figure1.yaml", "figure2.yaml", "figure3.yaml", "sample_brownian.yaml"])
def test_shipped_configs_parse(name):
    parse_config((CONFIGS / name).read_text())


def test_sample_job_and_manifest(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(MINIMAL)
    assert main(["sample", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "sample.csv")
    assert rows[0] == ["index", "position", "supremum", "tau"] and len(rows) == 51
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["cost_total"] == 50 * 5 and man["seed"] == 3 and man["workers"] == 1
    assert {"config_hash", "version", "wall_time_s"} <= set(man)


def test_byte_identical_reruns(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(NIG3 + "params: {n: 6, N: 3000, batch_size: 1000}\n")
    outs = []
    for i, workers in enumerate(("1", "1", "3")):
        out = tmp_path / f"o{i}"
        assert main(["estimate", "--config", str(cfg), "--out", str(out), "--seed", "11", "--workers", workers]) == 0
        outs.append((out / "estimate.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: {kind: BrownianDrift, sigma: -1}\n")
    assert main(["sample", "--config", str(bad)]) == 2
    assert main(["sample", "--config", str(tmp_path / "missing.yaml")]) == 2
    mismatch = tmp_path / "m.yaml"
    mismatch.write_text(MINIMAL)
    assert main(["estimate", "--config", str(mismatch)]) == 2
    # a pilot too small to see any decay is a numeric failure
    tiny = tmp_path / "tiny.yaml"
    tiny.write_text(NIG3 + "params: {pilot_levels: 6, pilot_N: 2}\n")
    assert main(["mlmc", "--config", str(tiny), "--out", str(tmp_path / "t")]) == 3


@pytest.mark.parametrize("job,params,files,header", [
    ("estimate", "{n: 5, N: 500}", ["estimate.csv"], None),
    ("mlmc", "{pilot_levels: 8, pilot_N: 5000, epsilons: [0.5, 0.25], N_ref: 2000}", ["mlmc.csv"],
     ["epsilon", "n_levels", "total_cost", "estimate", "ref", "error"]),
    ("unbiased", "{N: 100, replications: 2}", ["unbiased.csv"], None),
    ("bounds", "{levels: [0, 4]}", ["bounds.csv"], ["quantity", "p/q", "n", "value"]),
    ("convergence", "{pilot_levels: 8, pilot_N: 20000}", ["convergence.csv", "convergence_fit.csv"],
     ["n", "mean", "variance", "bias_vs_ref", "level_var", "cost"]),
])
def test_jobs_write_their_tables(tmp_path, job, params, files, header):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(NIG3 + f"params: {params}\n")
    out = tmp_path / "o"
    assert main([job, "--config", str(cfg), "--out", str(out)]) == 0
    for f in files:
        assert (out / f).exists()
    if header:
        assert read_csv(out / files[0])[0] == header


def test_convergence_reports_bias_slope(tmp_path):
    text = (CONFIGS / "figure3.yaml").read_text().replace("job: figure3", "job: convergence")
    cfg = parse_config(text)
    out = run_job(cfg, str(tmp_path / "conv"))
    fit = {row[0]: float(row[1]) for row in read_csv(out / "convergence_fit.csv")[1:]}
    assert fit["log2_abs_mean_diff"] <= -0.45
    assert fit["log2_var_diff"] <= -0.45


def test_figure2_structure(tmp_path):
    text = (CONFIGS / "figure2.yaml").read_text().replace("N: 1000000", "N: 20000")
    out = run_job(parse_config(text), str(tmp_path / "f2"))
    rows = read_csv(out / "figure2.csv")
    cheb = [r for r in rows[1:] if r[2] == "chebyshev"]
    widths_up = {round(float(r[6]) - float(r[3]), 12) for r in cheb}
    assert len(widths_up) == 1  # upper end carries only the sampling radius
    lows = [float(r[3]) - float(r[5]) for r in cheb]
    assert all(a >= b for a, b in zip(lows, lows[1:]))


def test_figure1_sba_column_at_level_15(tmp_path):
    text = (CONFIGS / "figure1.yaml").read_text()
    text = text.replace("levels: [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 15, 20, 30, 40]", "levels: [15]")
    out = run_job(parse_config(text), str(tmp_path / "f1"))
    rows = read_csv(out / "figure1.csv")
    sba = [r for r in rows[1:] if r[1] == "lookback_put" and r[2] == "sba"][0]
    est, se = float(sba[3]), float(sba[4])
    assert abs(est - 1.6471) <= 3 * se, f"lookback at n=15: {est} +- {se}"
