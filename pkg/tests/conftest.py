"""Shared fixtures: finite-difference checker, toy samples, tiny corpora."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # make `oracles` importable

from glmp import synth
from glmp.data import EntityTable, make_sample
from glmp.memory import Triplet

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

ACCEPTANCE = []  # verdict lines collected by tests/test_acceptance.py


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def rel_err(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def finite_diff_check(tensors, loss_fn, step=1e-5, tol=1e-4, rng=None, max_entries=None):
    """Compare analytic gradients of loss_fn() against central differences.

    tensors: leaf Tensors to check (requires_grad must be set). loss_fn
    rebuilds the graph from current .data each call. Checks every entry
    unless max_entries caps it (entries then sampled with rng).
    Returns the worst relative error seen.
    """
    for t in tensors:
        t.grad = None
    loss = loss_fn()
    loss.backward()
    worst = 0.0
    for t in tensors:
        grad = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        idx = range(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        for i in idx:
            keep = flat[i]
            flat[i] = keep + step
            up = float(loss_fn().data)
            flat[i] = keep - step
            down = float(loss_fn().data)
            flat[i] = keep
            fd = (up - down) / (2 * step)
            err = rel_err(gflat[i], fd)
            if err > worst:
                worst = err
            assert err <= tol, (
                f"gradient mismatch at entry {i}: analytic {gflat[i]:.10g} "
                f"vs finite-difference {fd:.10g} (rel err {err:.3g})")
    return worst


@pytest.fixture(scope="session")
def entity_table():
    return EntityTable.from_values({
        "poi": ["valero", "starbucks", "toms house"],
        "distance": ["4 miles", "3 miles"],
        "address": ["200 alester ave", "792 bedoin st"],
        "traffic_info": ["heavy traffic", "no traffic"],
        "poi_type": ["gas station", "coffee or tea place"],
    })


@pytest.fixture
def toy_sample(entity_table):
    """2-turn dialogue over a 4-triplet KB, the gradient-check workhorse."""
    kb = [Triplet("valero", "distance", "4_miles"),
          Triplet("valero", "address", "200_alester_ave"),
          Triplet("starbucks", "distance", "3_miles"),
          Triplet("starbucks", "traffic_info", "heavy_traffic")]
    history = [Triplet("$user", "turn1", t) for t in
               ["where", "is", "the", "nearest", "gas_station"]]
    history += [Triplet("$system", "turn1", t) for t in
                ["valero", "is", "4_miles", "away"]]
    history += [Triplet("$user", "turn2", t) for t in
                ["what", "is", "the", "address"]]
    gold = ["valero", "is", "at", "200_alester_ave"]
    return make_sample("toy-0", 2, "navigation", kb, history, gold, entity_table)


@pytest.fixture(scope="session")
def babi_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("babi-small")
    synth.write_babi_task1(str(d), n_train=20, n_dev=6, n_test=6, n_oov=6, seed=13)
    return str(d)


@pytest.fixture(scope="session")
def smd_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("smd-small")
    synth.write_smd(str(d), n_train=24, n_dev=8, n_test=8, seed=29)
    return str(d)
