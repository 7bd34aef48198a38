# tests/test_adam.py
import numpy as np
import pytest

from src.autodiff.tensor import Parameter
from src.errors import ConfigError, DimensionError
from src.training.adam import AdamState, OptimConfig, adam_step, zero_grads

def _params(seed: int = 0):
	rng = np.random.default_rng(seed)
	a = Parameter(rng.standard_normal((3, 2)), name="a")
	b = Parameter(rng.standard_normal(4), name="b")
	return [a, b]

def test_zero_gradient_leaves_params_but_counts_the_step():
	params = _params()
	before = [p.data.copy() for p in params]
	st = AdamState()
	adam_step(params, {p.name: np.zeros_like(p.data) for p in params}, st)
	assert st.step == 1
	assert all(np.array_equal(p.data, b) for p, b in zip(params, before))

def test_first_step_moves_by_lr_times_sign():
	params = _params(1)
	before = [p.data.copy() for p in params]
	grads = {p.name: np.random.default_rng(2).uniform(0.5, 2.0, size=p.shape) * np.sign(p.data) for p in params}
	adam_step(params, grads, AdamState(config=OptimConfig(lr=0.01)))
	for p, b in zip(params, before):
		assert np.allclose(b - p.data, 0.01 * np.sign(grads[p.name]), rtol=1e-6)

def test_frozen_and_missing_params_are_skipped():
	a, b = _params(3)
	b.set_trainable(False)
	before = b.data.copy()
	st = AdamState()
	adam_step([a, b], {"a": np.ones_like(a.data), "b": np.ones_like(b.data)}, st)
	assert np.array_equal(b.data, before) and "b" not in st.m
	adam_step([a], {}, st)
	assert st.step == 2

	with pytest.raises(DimensionError):
		adam_step([a], {"a": np.ones(5)}, st)

def test_adam_is_deterministic_and_state_round_trips():
	def run(steps: int, state: AdamState, params):
		rng = np.random.default_rng(4)
		for _ in range(steps):
			adam_step(params, {p.name: rng.standard_normal(p.shape) for p in params}, state)
		return params

	p1 = run(6, AdamState(), _params(5))
	p2 = run(6, AdamState(), _params(5))
	assert all(np.array_equal(x.data, y.data) for x, y in zip(p1, p2))

	st = AdamState(config=OptimConfig(lr=5e-3))
	params = run(3, st, _params(6))
	arrays = st.arrays()
	assert sorted(arrays) == ["m.a", "m.b", "v.a", "v.b"]
	back = AdamState.from_arrays(st.config, st.step, arrays, lr=st.lr)
	assert back.step == 3 and back.current_lr() == 5e-3
	assert all(np.array_equal(back.m[k], st.m[k]) and np.array_equal(back.v[k], st.v[k]) for k in st.m)

def test_learning_rate_schedule_and_config():
	cfg = OptimConfig(lr=1e-3, lr_decay=0.5)
	assert [cfg.lr_at(e) for e in range(3)] == [1e-3, 5e-4, 2.5e-4]
	assert OptimConfig().lr_at(7) == 1e-3
	for bad in ({"lr": 0.0}, {"beta1": 1.0}, {"eps": 0.0}, {"lr_decay": 1.5}):
		with pytest.raises(ConfigError):
			OptimConfig(**bad)

def test_zero_grads():
	params = _params(7)
	for p in params:
		p.grad = np.ones_like(p.data)
	zero_grads(params)
	assert all(not np.any(p.grad) for p in params)

if __name__ == "__main__":
	test_zero_gradient_leaves_params_but_counts_the_step()
	test_first_step_moves_by_lr_times_sign()
	test_frozen_and_missing_params_are_skipped()
	test_adam_is_deterministic_and_state_round_trips()
	test_learning_rate_schedule_and_config()
	test_zero_grads()
	print("OK: adam tests passed")
