import numpy as np
import pytest

import smoothmc as smc

SIR_SOURCE = """\
species S=99 I=1 R=0
param k_i=0.12 k_r=0.05
reaction S + I -> I + I @ k_i*S*I
reaction I -> R @ k_r*I
"""

POISSON_SOURCE = """\
# pure birth process with uncertain arrival rate
species N=0
param mu=1.0
reaction -> N @ mu
"""

LACZ_SOURCE = """\
# LacZ expression (prokaryotic gene expression benchmark, 11 channels)
species PLac=1 RNAP=35 PLacRNAP=0 TrLacZ1=0 TrLacZ2=0 RbsLacZ=0
species Ribosome=350 RbsRibosome=0 TrRbsLacZ=0 LacZ=0 dgrLacZ=0 dgrRbsLacZ=0
param k1=0.17 k2=10 k3=1 k4=1 k5=0.015
param k6=0.17 k7=0.45 k8=0.4 k9=0.015 k10=6.42e-5 k11=0.3
reaction PLac + RNAP -> PLacRNAP @ k1*PLac*RNAP
reaction PLacRNAP -> PLac + RNAP @ k2*PLacRNAP
reaction PLacRNAP -> TrLacZ1 @ k3*PLacRNAP
reaction TrLacZ1 -> RbsLacZ + PLac + TrLacZ2 @ k4*TrLacZ1
reaction TrLacZ2 -> RNAP @ k5*TrLacZ2
reaction Ribosome + RbsLacZ -> RbsRibosome @ k6*Ribosome*RbsLacZ
reaction RbsRibosome -> Ribosome + RbsLacZ @ k7*RbsRibosome
reaction RbsRibosome -> TrRbsLacZ + RbsLacZ @ k8*RbsRibosome
reaction TrRbsLacZ -> LacZ @ k9*TrRbsLacZ
reaction LacZ -> dgrLacZ @ k10*LacZ
reaction RbsLacZ -> dgrRbsLacZ @ k11*RbsLacZ
"""

EXTINCTION_PROPERTY = "(F[100,120] I = 0) & (G[0,100] I > 0)"

BURST_PROPERTY_REDUCED = "F[600,800] ( delta(LacZ) > 0 & G[10,200] delta(LacZ) <= 0 )"


@pytest.fixture(scope="session")
def sir_model():
    return smc.parse_model(SIR_SOURCE)


@pytest.fixture(scope="session")
def poisson_model():
    return smc.parse_model(POISSON_SOURCE)


@pytest.fixture(scope="session")
def lacz_model():
    return smc.parse_model(LACZ_SOURCE)


@pytest.fixture(scope="session")
def extinction_formula():
    return smc.parse_formula(EXTINCTION_PROPERTY)


def constant_trajectory(value_by_species: dict, horizon: float) -> smc.Trajectory:
    names = tuple(value_by_species)
    states = np.array([[value_by_species[n] for n in names]], dtype=np.int64)
    return smc.Trajectory(names, np.array([]), states, horizon)


def step_trajectory(species: tuple, times, states, horizon: float) -> smc.Trajectory:
    return smc.Trajectory(species, np.asarray(times, dtype=float),
                          np.asarray(states, dtype=np.int64), horizon)
