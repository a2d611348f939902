import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openchain.cli import main, run_config, run_preset, sweep
from openchain.config import KEYS, format_config, parse_config
from openchain.dynamics import COLUMNS
from openchain.errors import CatalogError, ConfigError, InputError, OutputError, ParseError
from openchain.model import MARKOV, ChainConfig, Channel
from openchain.output import emit_plot, fmt, read_csv, write_csv
from openchain.presets import (
    CATALOG,
    PRESET_NAMES,
    extinction_time,
    get_preset,
    negative_duration,
    steady_value,
    sweep_configs,
    unique_configs,
)

from conftest import cached_run

TINY = "N=4\nn=1\nchannel=dephasing\ntmax=0.2\ndt=0.01\nsample_every=5\n"


def test_parse_examples():
    cfg = parse_config("")
    assert cfg == ChainConfig() and cfg.channel is Channel.NONE
    assert (cfg.J, cfg.delta, cfg.Gamma1, cfg.gamma2, cfg.dt, cfg.t_max, cfg.sample_every) == (-1.0, 1.0, 0.5, 5.0, 1e-3, 30.0, 100)
    fig2c = parse_config("N=6\nn=2\nchannel=dephasing\nGamma=0.5\ngamma=5\ninit=neel")
    assert fig2c == get_preset("fig2c").base.with_(t_max=30.0, sample_every=100)
    with pytest.raises(ConfigError, match="n=9"):
        parse_config("n=9\nN=6")


def test_parse_errors():
    with pytest.raises(ParseError, match="bogus"):
        parse_config("bogus=1")
    with pytest.raises(ParseError):
        parse_config("N=6\nN=7")
    with pytest.raises(ParseError):
        parse_config("gamma=2\ngamma1=3")
    with pytest.raises(ParseError):
        parse_config("N six")
    with pytest.raises(ParseError):
        parse_config("dt=nan")
    with pytest.raises(ParseError):
        parse_config("channel=amplitude")


def test_parse_comments_aliases_and_markov():
    cfg = parse_config("# header\n\nDelta = 0   # XX chain\ngamma=markov\nGamma1=0.25\n")
    assert cfg.delta == 0.0 and cfg.is_markov and cfg.Gamma1 == 0.25 and cfg.Gamma2 == 0.5
    assert "Gamma" in KEYS and "gamma" in KEYS


configs = st.integers(3, 11).flatmap(lambda N: st.builds(
    ChainConfig,
    N=st.just(N),
    n=st.integers(1, N - 2),
    delta=st.sampled_from([0.0, 1.0, 0.5]),
    channel=st.sampled_from(list(Channel)),
    Gamma1=st.floats(0, 2),
    gamma2=st.one_of(st.floats(0.1, 100), st.just(MARKOV)),
    init=st.sampled_from(["neel", "zeros"]),
    dt=st.floats(1e-4, 1e-2),
    sample_every=st.integers(1, 200),
))


@settings(max_examples=100, deadline=None)
@given(configs)
def test_format_parse_round_trip(cfg):
    assert parse_config(format_config(cfg)) == cfg


def test_catalog_completeness():
    want = {f"fig{k}{x}" for k in (2, 3, 6, 7, 12, 13, 16, 17) for x in "abc"}
    want |= {f"fig{k}{x}" for k in (4, 14) for x in "ab"} | {f"fig{k}{x}" for k in (5, 15) for x in "abcd"}
    want |= {"fig8", "fig9", "fig10", "fig11"}
    assert set(PRESET_NAMES) == want == set(CATALOG)
    for name in PRESET_NAMES:
        assert get_preset(name).configs()
    assert len(unique_configs()) < sum(len(p.configs()) for p in CATALOG.values())
    with pytest.raises(CatalogError, match="fig2a"):
        get_preset("fig99")


def test_preset_examples():
    assert get_preset("fig2a").base.is_closed and get_preset("fig2a").base.Gamma1 == 0.0
    b = get_preset("fig6b").base
    assert (b.gamma1, b.gamma2, b.channel, b.init.value) == (2.0, 2.0, Channel.DEPHASING, "neel")
    b = get_preset("fig12a").base
    assert b.delta == 0.0 and b.is_closed
    assert [c.n for _, c in get_preset("fig11").configs()] == [1, 2, 3]
    assert [c.gamma1 for _, c in get_preset("fig8").configs()] == [1.0, 2.0, MARKOV]
    for k in (2, 3, 4, 5, 6, 7):
        for letter in "abcd":
            name = f"fig{k}{letter}"
            if name in CATALOG:
                xx = get_preset(f"fig{k + 10}{letter}").base
                assert xx == CATALOG[name].base.with_(delta=0.0, t_max=xx.t_max)


def test_sweep_all_or_nothing(tmp_path):
    base = ChainConfig(N=5, n=2, channel="dephasing")
    with pytest.raises(ConfigError):
        sweep_configs(base, "n", [1, 2, 4])
    with pytest.raises(ConfigError):
        sweep(base, "n", [1, 2, 4], tmp_path / "s")
    assert not (tmp_path / "s").exists() or not any((tmp_path / "s").iterdir())
    with pytest.raises(ConfigError):
        sweep(base, "J", [1.0], tmp_path)


def test_summary_statistics():
    t = np.arange(0.0, 10.0, 0.5)
    tln = np.where(t < 3, -0.5 * t, 0.0)
    tln[t >= 3] = 0.0
    tln[(t >= 3) & (t < 4)] = -2e-4
    assert extinction_time(t, tln) == 4.0
    assert negative_duration(t, tln) == 0.5 * np.count_nonzero(tln < -1e-4)
    assert extinction_time(t, -np.ones_like(t)) == math.inf
    assert steady_value(t, np.ones_like(t)) == (1.0, 0.0)


def test_csv_format_and_row_count(tmp_path):
    cfg = parse_config(TINY)
    run_config(cfg, tmp_path, "tiny")
    text = (tmp_path / "tiny.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) - 1 == math.floor(cfg.t_max / (cfg.dt * cfg.sample_every)) + 1
    data = read_csv(tmp_path / "tiny.csv")
    assert data["t"][0] == 0.0 and abs(data["TMI"][0]) <= 1e-10 and abs(data["TLN"][0]) <= 1e-10
    man = json.loads((tmp_path / "tiny_manifest.json").read_text())
    assert man["runs"][0]["config"]["N"] == 4 and man["runs"][0]["dt"] == 0.01
    assert {"seed", "timestamp", "version", "outdir"} <= set(man)


def test_fmt_round_trip():
    for x in (0.1, 1 / 3, -2.5e-17, 1e300, 0.0):
        assert float(fmt(x)) == x
    assert fmt(math.inf) == "inf" and fmt(True) == "true" and fmt(3) == "3"


def test_bytewise_reproducible(tmp_path):
    cfg = parse_config(TINY.replace("dephasing", "dissipation"))
    run_config(cfg, tmp_path / "a", "r")
    run_config(cfg, tmp_path / "b", "r")
    assert (tmp_path / "a" / "r.csv").read_bytes() == (tmp_path / "b" / "r.csv").read_bytes()


def test_write_csv_rejects_empty(tmp_path):
    rec = cached_run(parse_config(TINY))
    from openchain.dynamics import TrajectoryRecord

    with pytest.raises(InputError):
        write_csv(TrajectoryRecord(np.array([]), {}), tmp_path / "x.csv")
    write_csv(rec, tmp_path / "ok.csv")


def test_plot(tmp_path):
    cfg = parse_config(TINY)
    paths = []
    for g in ("1", "2", "inf"):
        run_config(parse_config(TINY + f"gamma={g}\n"), tmp_path, f"g{g}")
        paths.append(tmp_path / f"g{g}.csv")
    emit_plot(paths[:1], tmp_path / "one.svg", "TMI")
    svg = (tmp_path / "one.svg").read_text()
    assert svg.count("<polyline") == 1 and 'class="zero"' in svg
    assert ">t</text>" in svg and ">TMI</text>" in svg
    emit_plot(paths, tmp_path / "three.svg", "TLN", ["γ=1", "γ=2", "Markov"])
    svg = (tmp_path / "three.svg").read_text()
    assert svg.count("<polyline") == 3 and "γ=2" in svg and "Markov" in svg
    with pytest.raises(InputError):
        emit_plot([], tmp_path / "x.svg")
    with pytest.raises(InputError):
        emit_plot(paths[:1], tmp_path / "x.svg", "nope")
    run_config(parse_config(TINY.replace("tmax=0.2", "tmax=0.3")), tmp_path, "long")
    with pytest.raises(InputError):
        emit_plot([paths[0], tmp_path / "long.csv"], tmp_path / "x.svg")


def test_exit_codes(tmp_path, capsys):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text(TINY)
    assert main(["run", str(cfgfile), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "run.csv").exists()
    assert main(["run", "--set", "n=9", "--out", str(tmp_path)]) == 2
    assert main(["run", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 2
    assert main(["preset", "fig99", "--out", str(tmp_path)]) == 2
    assert main(["plot", "--out", str(tmp_path / "p.svg")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", str(cfgfile), "--out", str(blocker / "sub")]) == 4
    assert main(["preset", "--list"]) == 0
    assert "fig17c" in capsys.readouterr().out


def test_cli_overrides_and_sweep(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text(TINY)
    out = tmp_path / "sw"
    rc = main(["sweep", "--config", str(cfgfile), "--axis", "gamma", "--values", "1,inf", "--tmax", "0.1", "--out", str(out)])
    assert rc == 0
    rows = (out / "sweep_summary.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[0].startswith("label,min_TMI")
    assert len(read_csv(out / "sweep_gamma=inf.csv")["t"]) == 3
    assert main(["sweep", "--config", str(cfgfile), "--axis", "n", "--values", "inf", "--out", str(out)]) == 2


def test_preset_runner_with_override(tmp_path):
    m = run_preset("fig4a", tmp_path, t_max=0.4)
    assert [r["csv"] for r in m.runs] == ["fig4a.csv"]
    assert len(read_csv(tmp_path / "fig4a.csv")["t"]) == 21
    m = run_preset("fig11", tmp_path, t_max=0.2, dt=0.01)
    assert len(m.runs) == 3 and (tmp_path / "fig11_summary.csv").exists()


def test_output_errors(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    with pytest.raises(OutputError):
        run_config(parse_config(TINY), blocker / "x")


def test_coupling_sweep_reduces_scrambling():
    base = get_preset("fig6a").base.with_(gamma1=5.0, gamma2=5.0, t_max=12.0, dt=2e-3, sample_every=10)
    mins = [float(cached_run(c)["TLN"].min()) for c in sweep_configs(base, "Gamma", [0.25, 0.5, 1.0])]
    assert abs(mins[0]) > abs(mins[1]) > abs(mins[2])
