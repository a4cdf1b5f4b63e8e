from src.lq_recovery.data_files import read_matrix, read_vector, write_matrix, write_vector
from src.lq_recovery.errors import DomainError
from src.lq_recovery.options import (
    ExperimentConfig,
    MatrixEnsemble,
    NoiseSpec,
    SignalDistribution,
    SolverOptions,
    load_json_object,
)
import json
import numpy as np
import os
import pytest
import tempfile


def test_solver_options():
    assert SolverOptions.from_dict(None) == SolverOptions()
    opts = SolverOptions.from_dict({"max_outer": 10, "eps_floor": 1e-8})
    assert opts.max_outer == 10
    assert opts.to_dict()["eps_floor"] == 1e-8
    assert SolverOptions.from_dict(opts.to_dict()) == opts
    with pytest.raises(DomainError):
        SolverOptions(eps_decay=1.0)
    with pytest.raises(DomainError):
        SolverOptions(max_inner=0)
    with pytest.raises(DomainError):
        SolverOptions.from_dict({"tolerance": 1e-3})
    for bad in ({"max_outer": "ten"}, {"max_inner": 2.5}, {"eps0": "1"}, {"jitter": True}, {"seed": -3}):
        with pytest.raises(DomainError):
            SolverOptions.from_dict(bad)


def test_experiment_config_from_dict():
    config = ExperimentConfig.from_dict(
        {
            "n": 24,
            "p": 32,
            "k_grid": [1, 2],
            "q_grid": [0.5, 1],
            "trials": 10,
            "master_seed": 3,
            "noise": {"eta": 0.2, "eps": 0.1},
            "matrix_ensemble": "RowOrthonormal",
            "signal": "Gaussian",
            "solver": {"max_outer": 50},
        }
    )
    assert config.noise == NoiseSpec(eta=0.2, eps=0.1)
    assert config.matrix_ensemble == MatrixEnsemble.ROW_ORTHONORMAL
    assert config.signal == SignalDistribution.GAUSSIAN
    assert config.solver.max_outer == 50
    assert config.q_grid == [0.5, 1.0]
    assert ExperimentConfig.from_dict(config.to_dict()) == config


def test_experiment_config_errors():
    base = {"n": 8, "p": 16, "k_grid": [2], "q_grid": [0.5], "trials": 1, "master_seed": 0}
    assert ExperimentConfig.from_dict(base).noise is None
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**base, "matrix_ensemble": "Bernoulli"})
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**base, "seed": 1})
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({key: value for key, value in base.items() if key != "trials"})
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**base, "noise": {"eta": -1, "eps": 0}})
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**base, "noise": {"eta": 0.01, "eps": 0.02}})
    with pytest.raises(DomainError):
        NoiseSpec(eta=0.1, eps=0.2)
    assert NoiseSpec(eta=0.1, eps=0.1).eta == 0.1
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**base, "max_order": 17})


def test_experiment_config_from_file():
    data = {"n": 8, "p": 16, "k_grid": [2], "q_grid": [0.5], "trials": 1, "master_seed": 0}
    temp_fd, temp_path = tempfile.mkstemp(suffix=".json")
    try:
        with os.fdopen(temp_fd, "w") as tmp:
            json.dump(data, tmp)
        assert ExperimentConfig.from_file(temp_path).to_dict()["matrix_ensemble"] == "GaussianIID"
    finally:
        os.remove(temp_path)


def test_data_files():
    with tempfile.TemporaryDirectory() as folder:
        A = np.random.default_rng(1).standard_normal((3, 5))
        write_matrix(os.path.join(folder, "A.csv"), A)
        assert np.array_equal(read_matrix(os.path.join(folder, "A.csv")), A)

        v = np.array([0.1, -2.5e-17, 3.0])
        write_vector(os.path.join(folder, "v.txt"), v)
        assert np.array_equal(read_vector(os.path.join(folder, "v.txt")), v)

        with open(os.path.join(folder, "commented.txt"), "w") as fd:
            fd.write("# measurements\n1.5\n-2\n")
        assert read_vector(os.path.join(folder, "commented.txt")).tolist() == [1.5, -2.0]

        with open(os.path.join(folder, "bad.txt"), "w") as fd:
            fd.write("1.0\nabc\n")
        with pytest.raises(DomainError):
            read_vector(os.path.join(folder, "bad.txt"))

        with open(os.path.join(folder, "ragged.csv"), "w") as fd:
            fd.write("1,2,3\n4,5\n")
        with pytest.raises(DomainError):
            read_matrix(os.path.join(folder, "ragged.csv"))


def test_json_files_must_hold_an_object():
    with tempfile.TemporaryDirectory() as folder:
        path = os.path.join(folder, "opts.json")
        for content in ["{not json", "[1, 2]", "3"]:
            with open(path, "w") as fd:
                fd.write(content)
            with pytest.raises(DomainError):
                load_json_object(path)
            with pytest.raises(DomainError):
                SolverOptions.from_file(path)
            with pytest.raises(DomainError):
                ExperimentConfig.from_file(path)
        with open(path, "w") as fd:
            fd.write('{"max_inner": 7}')
        assert SolverOptions.from_file(path).max_inner == 7
