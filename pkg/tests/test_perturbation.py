from __future__ import annotations

import pandas as pd
import pytest

from nsap.monitor.norms import MonitorConfig, make_recorder
from nsap.monitor.perturbation import PERTURBATION_IDS, advise_smallness, check_perturbation, consistency_gap
from nsap.monitor.series import SeriesBundle
from nsap.solver.config import SolverConfig
from nsap.solver.integrator import run, run_coupled
from nsap.solver.trajectory import CoupledTrajectory
from nsap.spectral.fields import VectorField

CONFIG = SolverConfig(dt=0.005, t_end=0.05, snapshot_interval=0.025)
RECORDER = make_recorder(MonitorConfig(p_set=[4.0]))


def norms_bundle(l2: float, ln: float, lp: float) -> SeriesBundle:
    frame = pd.DataFrame({"t": [0.0], "l2": [l2], "lN": [ln], "lp_4": [lp]})
    return SeriesBundle(frame=frame, dim=2, viscosity=1.0, box_length=1.0, dt=0.1, p_set=(4.0,))


@pytest.fixture
def coupled(taylor_green2: VectorField, random_field2: VectorField) -> CoupledTrajectory:
    return run_coupled(taylor_green2, random_field2.scaled(0.02), CONFIG, recorder=RECORDER)


def test_smallness_advisor() -> None:
    v = norms_bundle(1.0, 1.0, 2.0)
    assert advise_smallness(v, norms_bundle(0.05, 0.05, 0.1), 4.0).within
    advice = advise_smallness(v, norms_bundle(0.2, 0.05, 0.1), 4.0)
    assert not advice.within
    assert advice.ratios["l2"] == pytest.approx(0.2)
    assert advise_smallness(norms_bundle(0.0, 0.0, 0.0), norms_bundle(0.0, 0.0, 0.0), 4.0).within


def test_outside_regime_is_inconclusive(taylor_green2: VectorField, random_field2: VectorField) -> None:
    big = run_coupled(taylor_green2, random_field2, CONFIG, recorder=RECORDER)
    reports = check_perturbation(big, 4.0)
    assert set(reports) == set(PERTURBATION_IDS)
    assert all(r.verdict == "inconclusive" for r in reports.values())
    assert reports["3.8"].header["smallness"]["within"] is False


def test_exponent_at_or_below_dimension(coupled: CoupledTrajectory) -> None:
    reports = check_perturbation(coupled, 2.0)
    assert all("p > N=2" in r.notes[0] for r in reports.values())


def test_short_run_reports(coupled: CoupledTrajectory) -> None:
    reports = check_perturbation(coupled, 4.0)
    assert set(reports) == set(PERTURBATION_IDS)
    assert reports["3.9-v"].verdict == "holds-with-C"
    assert reports["3.9-w"].verdict == "holds-with-C"
    assert reports["3.4"].c_emp is not None
    assert "insufficient decay" in reports["3.1"].notes[0]
    assert reports["3.4"].header["alpha"] == "8"


def test_bundles_and_trajectory_agree(coupled: CoupledTrajectory) -> None:
    bundles = (
        SeriesBundle.from_trajectory(coupled.v, [4.0]),
        SeriesBundle.from_trajectory(coupled.w, [4.0]),
    )
    assert check_perturbation(bundles, 4.0)["3.4"] == check_perturbation(coupled, 4.0)["3.4"]


def test_consistency_gap(coupled: CoupledTrajectory, taylor_green2: VectorField, random_field2: VectorField) -> None:
    direct = run(taylor_green2 + random_field2.scaled(0.02), CONFIG)
    assert consistency_gap(coupled, direct) < 1e-10
    shorter = run(taylor_green2, CONFIG.model_copy(update={"t_end": 0.025}))
    with pytest.raises(ValueError):
        consistency_gap(coupled, shorter)
