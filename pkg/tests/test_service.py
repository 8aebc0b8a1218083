import pytest
from fastapi.testclient import TestClient

from botma import __version__
from botma.scenarios import load_preset, scenario_to_dict
from botma.service import schemas
from botma.service.app import app
from botma.service.client import HttpBackend, LocalBackend, ServiceError

CMA_SMALL = {"kind": "cma", "feval_budget": 2000}
GRID_SMALL = {"kind": "grid", "coarse": [8, 9, 10]}


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def http(client):
    backend = HttpBackend("http://testserver")
    backend.client = client
    return backend


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_presets(client):
    names = client.get("/presets").json()["presets"]
    assert names == [f"trial{i:02d}" for i in range(1, 13)]
    body = client.get("/presets/trial07").json()
    assert body["truth"]["r0"] == 4006.0
    assert client.get("/presets/nope").status_code == 422


def test_simulate(client):
    r = client.post("/simulate", json={"preset": "trial07"}).json()
    assert len(r["times"]) == len(r["noisy"]) == len(r["observer"]) == 121
    assert r["noisy"] == r["clean"]


def test_simulate_inline_scenario(client):
    sc = scenario_to_dict(load_preset("trial09"))
    r = client.post("/simulate", json={"scenario": sc})
    assert r.status_code == 200
    assert r.json()["noisy"] != r.json()["clean"]


@pytest.mark.parametrize("body", [{}, {"preset": "trial07", "scenario": scenario_to_dict(load_preset("trial07"))}])
def test_scenario_ref_needs_exactly_one(client, body):
    assert client.post("/simulate", json=body).status_code == 422


def test_inline_one_leg_rejected(client):
    sc = scenario_to_dict(load_preset("trial07"))
    sc["legs"] = sc["legs"][:1]
    sc["legs"][0]["duration"] = 5000.0
    r = client.post("/simulate", json={"scenario": sc})
    assert r.status_code == 422
    assert "leg requirement" in r.json()["detail"]


def test_solve_cma(client):
    r = client.post("/solve", json={"preset": "trial07", "solver": CMA_SMALL, "trace": True}).json()
    assert r["solver"] == "cma"
    assert r["fevals"] == 2000
    assert len(r["trace"]) == 20


def test_solve_grid_volume(client):
    r = client.post("/solve?volume=true", json={"preset": "trial07", "solver": GRID_SMALL}).json()
    assert r["fevals"] == 720
    assert len(r["details"]["volume"]) == 720


def test_solve_ga_rows(client):
    ga = {"kind": "ga", "population_size": 6, "narrowing_generations": 2, "main_generations": 2, "inner_runs": 3}
    r = client.post("/solve", json={"preset": "trial07", "solver": ga}).json()
    assert len(r["ga_runs"]) == 3
    assert r["fevals"] == 6 * 4 * 3
    assert all(row["fevals"] == 24 for row in r["ga_runs"])


def test_large_grid_needs_confirmation(client):
    r = client.post("/solve", json={"preset": "trial07", "solver": {"kind": "grid"}})
    assert r.status_code == 422
    assert "confirmation" in r.json()["detail"]


@pytest.mark.parametrize(
    "solver",
    [{"kind": "simplex"}, {"kind": "cma", "feval_budget": -1}, {"kind": "cma", "bogus": 1}],
)
def test_bad_solver(client, solver):
    assert client.post("/solve", json={"preset": "trial07", "solver": solver}).status_code == 422


def test_monte_carlo_and_thresholds(client):
    body = {"preset": "trial07", "solver": GRID_SMALL, "M": 3, "thresholds": {"max_abs_dev": {"r0": 1e-9}}}
    r = client.post("/mc", json=body).json()
    assert r["summary"]["runs"] == 3
    assert r["summary"]["std"]["r0"] == 0.0
    assert len(r["summary"]["records"]) == 3
    assert r["violations"]


def test_sweep(client):
    r = client.post("/sweep", json={"preset": "trial07", "solver": CMA_SMALL, "M": 2, "sigmas": [0, 1]}).json()
    assert [row["noise_sigma"] for row in r["rows"]] == [0.0, 1.0]
    bad = client.post("/sweep", json={"preset": "trial07", "solver": CMA_SMALL, "M": 2, "sigmas": [1, 0]})
    assert bad.status_code == 422


def test_compare(client):
    body = {"preset": "trial08", "solvers": {"grid": GRID_SMALL, "cma": CMA_SMALL}, "M": 2}
    r = client.post("/compare", json=body).json()
    assert r["fevals"] == {"grid": 1440, "cma": 4000}
    assert [row["label"] for row in r["rows"]] == ["grid", "cma"]


def test_http_backend_matches_local(http):
    req = schemas.SolveRequest(preset="trial07", solver=schemas.SolverSpec(**GRID_SMALL))
    remote = http.call("solve", req)
    local = LocalBackend().call("solve", req)
    assert remote == local
    assert http.call("preset", name="trial07").truth.r0 == 4006.0
    assert http.call("health").version == __version__


def test_http_backend_errors(http):
    with pytest.raises(ServiceError) as info:
        http.call("preset", name="missing")
    assert info.value.validation


def test_unreachable_service():
    backend = HttpBackend("http://127.0.0.1:9", timeout=0.5)
    with pytest.raises(ServiceError) as info:
        backend.call("health")
    assert not info.value.validation
