import math

import pytest
from sqlalchemy.orm import sessionmaker

from qict.db.session import make_engine
from qict.ledger import create_tables
from qict.physics.interferometer import InterferometerConfig, ideal_config
from qict.physics.pairsource import balanced_sources, from_efficiencies
from qict.physics.sample import Layer, LayerStack
from qict.physics.spectra import SignalSpectrum

# Heralding efficiencies measured for the two crystals (signal->idler, idler->signal)
MEASURED_SOURCE_1 = (0.63, 0.43)
MEASURED_SOURCE_2 = (0.60, 0.49)


@pytest.fixture
def spectrum() -> SignalSpectrum:
    """810 nm spectrum calibrated to 0.198 mm axial resolution, 0.07 nm bins, 256 points"""
    return SignalSpectrum()


@pytest.fixture
def ideal_cfg() -> InterferometerConfig:
    return ideal_config()


@pytest.fixture
def measured_cfg() -> InterferometerConfig:
    src1, src2 = balanced_sources(from_efficiencies(*MEASURED_SOURCE_1), from_efficiencies(*MEASURED_SOURCE_2))
    return InterferometerConfig(src1=src1, src2=src2)


@pytest.fixture
def measured_mu() -> float:
    return math.sqrt(MEASURED_SOURCE_1[0] * MEASURED_SOURCE_2[0])


@pytest.fixture
def sample1_stack() -> LayerStack:
    """Sapphire over an air gap on silicon, front face 0.3 mm behind the reference plane"""
    return LayerStack(
        layers=(Layer(0.442e-3, 1.77), Layer(0.431e-3, 1.0)),
        substrate_index=3.61,
        reference_plane_offset=-0.3e-3,
    )


@pytest.fixture
def sample2_stack() -> LayerStack:
    """Silicon, air gap, sapphire in air, front face 0.35 mm behind the reference plane"""
    return LayerStack(
        layers=(Layer(0.251e-3, 3.61), Layer(0.25e-3, 1.0), Layer(0.489e-3, 1.77)),
        reference_plane_offset=-0.35e-3,
    )


@pytest.fixture
def ledger_engine():
    engine = make_engine("sqlite://")
    create_tables(engine)
    yield engine
    engine.dispose()


@pytest.fixture
def ledger_db(ledger_engine):
    """In-memory SQLite session for run ledger tests"""
    db = sessionmaker(autocommit=False, autoflush=False, bind=ledger_engine)()
    try:
        yield db
    finally:
        db.close()
