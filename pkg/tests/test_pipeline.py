from __future__ import annotations

import asyncio
import io
import math

import pandas as pd
import pytest

from app.config import load_config
from app.experiment_pipeline import GridPoint, evaluate_point, expand_grid, run_experiment, run_grid
from app.report.tables import CSV_COLUMNS


def _small(name, **overrides):
    return load_config(name, overrides={"h_exponents": [2], **overrides})


def test_expand_table1_grid():
    points = expand_grid(_small("table1-left"))
    assert len(points) == 5 + 2 * 5
    assert [p.pressure_mode for p in points if p.preconditioner == "B2"][:5] == ["dg"] * 5
    assert points[0] == GridPoint(k=1.0, h_exponent=2, preconditioner="B1")


def test_expand_single_pressure_mode():
    points = expand_grid(_small("table1-left", pressure_mode="exact_schur"))
    assert {p.pressure_mode for p in points if p.preconditioner == "B2"} == {"exact_schur"}
    assert len(points) == 10


def test_expand_tensor_grid_uses_scaled_dg():
    points = expand_grid(_small("table2", h_exponents=[3]))
    assert len(points) == 2 * (5 + 2 * 5)
    assert {p.pressure_mode for p in points} == {None, "scaled_dg", "exact_schur"}
    assert {p.theta for p in points} == {0.0, math.pi / 4}


def test_expand_biot_and_infsup_grids():
    biot = expand_grid(_small("table3"))
    assert len(biot) == 4 * 7
    assert all(p.pressure_mode is None for p in biot)
    infsup = expand_grid(_small("infsup"))
    assert {p.preconditioner for p in infsup} == {"infsup"}
    assert len(infsup) == 5


def test_evaluate_b1_point():
    config = _small("table1-right")
    result = evaluate_point(config, GridPoint(k=1e-4, h_exponent=2, preconditioner="B1"))
    assert 1.0 < result.value < 1.2
    assert result.n_filtered_null == 0
    assert result.minres_iterations is None


def test_evaluate_with_minres():
    config = _small("table1-right", minres=True)
    result = evaluate_point(config, GridPoint(k=1e-2, h_exponent=2, preconditioner="B2", pressure_mode="dg"))
    assert result.n_filtered_null == 0
    assert result.minres_converged
    assert 0 < result.minres_iterations < 100


def test_run_grid_keeps_grid_order():
    config = _small("table1-left", k_values=[1.0, 1e-4], jobs=3)
    results = asyncio.run(run_grid(config, progress=False))
    assert [r.point for r in results] == expand_grid(config)


def test_table_does_not_depend_on_worker_count(tmp_path):
    texts = []
    for jobs in (1, 2):
        config = _small("table1-right", k_values=[1.0, 1e-6], jobs=jobs)
        _, path = run_experiment(config, out=tmp_path / f"jobs{jobs}.md", progress=False)
        texts.append(path.read_text())
    assert texts[0] == texts[1]


def test_csv_payload(tmp_path):
    config = _small("table1-right", k_values=[1.0, 1e-6], output_format="csv")
    results, path = run_experiment(config, out=tmp_path / "t1.csv", progress=False)
    frame = pd.read_csv(io.StringIO(path.read_text()))
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 2 + 2 * 2
    assert set(frame["pressure_mode"].fillna("")) == {"", "dg", "exact_schur"}
    assert frame["value"].tolist() == pytest.approx([r.value for r in results], rel=1e-12)
    assert (frame["experiment"] == "table1-right").all()


def test_markdown_table(tmp_path):
    config = _small("table1-left", k_values=[1.0, 1e-4])
    results, path = run_experiment(config, out=tmp_path / "t1.md", progress=False)
    text = path.read_text()
    assert text.startswith("# table1-left")
    assert "## B1" in text and "## B2" in text
    assert "K \\ h" in text
    assert "10^-4" in text and "2^-2" in text
    b2 = [r for r in results if r.point.preconditioner == "B2" and r.point.k == 1e-4]
    assert f"{b2[0].value:.1f}({b2[1].value:.1f})" in text


def test_tensor_markdown_labels_theta(tmp_path):
    config = _small("table2", k_values=[1.0], thetas=[0.7853981633974483], preconditioners=["B1"])
    _, path = run_experiment(config, out=tmp_path / "t2.md", progress=False)
    text = path.read_text()
    assert "## B1, theta = 0.25pi" in text
    assert "K0 \\ h" in text


def test_infsup_sweep(tmp_path):
    config = _small("infsup", k_values=[1.0, 1e-6], output_format="csv")
    results, _ = run_experiment(config, out=tmp_path / "infsup.csv", progress=False)
    assert [r.value for r in results] == pytest.approx([1.0, 1.0], abs=1e-3)


def test_biot_sweep(tmp_path):
    config = _small("table3", k_values=[1.0], preconditioners=["B2"])
    results, _ = run_experiment(config, out=tmp_path / "t3.md", progress=False)
    assert len(results) == 1
    assert 1.0 < results[0].value < 10


def test_failures_propagate():
    config = _small("table1-left", k_values=[1.0])
    bad = config.model_copy(update={"preconditioners": ["B7"]})
    with pytest.raises(ValueError):
        asyncio.run(run_grid(bad, progress=False))


def test_algebraic_preset_runs_through_the_pipeline(tmp_path):
    config = load_config("algebraic", overrides={"h_exponents": [3], "k_values": [1.0, 1e-4], "jobs": 2})
    results, path = run_experiment(config, out=tmp_path / "algebraic.md", progress=False)

    values = {(r.point.preconditioner, r.point.k): r.value for r in results}
    golden = (3 + math.sqrt(5)) / 2
    assert values["schur", 1.0] == pytest.approx(golden, rel=1e-6)
    assert values["schur", 1e-4] == pytest.approx(golden, rel=1e-6)
    assert values["augmented_b1", 1e-4] == pytest.approx(values["augmented_b1", 1.0], rel=1e-6)

    text = path.read_text()
    assert "alpha \\ n" in text
    assert "n=8" in text
    assert "## augmented_b2" in text
