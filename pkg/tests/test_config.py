import json

from gtrsolve.config import SecularConfig, SolverConfig


def test_defaults():
	cfg = SolverConfig()
	assert cfg.kkt_tol == 1e-8
	assert cfg.width_tol == 1e-11
	assert cfg.secular_max_iters == 200
	assert cfg.dense_threshold == 500
	assert cfg.validate()
	assert cfg.cg_iterations(7) == 70


def test_save_and_load(tmp_path):
	cfg = SolverConfig(kkt_tol=1e-9, use_interpolation=False, seed=3)
	path = tmp_path / "cfg" / "solver.json"
	cfg.save(path)
	assert SolverConfig.load(path) == cfg
	assert json.loads(path.read_text())["seed"] == 3


def test_load_missing_or_broken(tmp_path):
	assert SolverConfig.load(tmp_path / "missing.json") == SolverConfig()
	broken = tmp_path / "broken.json"
	broken.write_text("{not json")
	assert SolverConfig.load(broken) == SolverConfig()


def test_unknown_keys_are_ignored(caplog):
	cfg = SolverConfig.from_dict({"kkt_tol": 1e-7, "colour": "blue"})
	assert cfg.kkt_tol == 1e-7
	assert "colour" in caplog.text


def test_validate_rejects_bad_values():
	assert not SolverConfig(kkt_tol=0.0).validate()
	assert not SolverConfig(cg_max_iter=0).validate()
	assert not SolverConfig(doubling_cap=0).validate()
	assert not SecularConfig(width_tol=-1.0).validate()


def test_with_overrides_skips_none():
	cfg = SolverConfig().with_overrides(kkt_tol=None, width_tol=1e-9)
	assert cfg.kkt_tol == 1e-8
	assert cfg.width_tol == 1e-9


def test_secular_config():
	sc = SolverConfig(kkt_tol=1e-6, secular_max_iters=5, use_boundary_step=False).secular_config()
	assert sc == SecularConfig(kkt_tol=1e-6, max_iters=5, use_boundary_step=False)
