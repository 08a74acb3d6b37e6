"""Qubit channels: which ones keep entanglement alive under iteration.

Run with ``python3 demos/qubit_tour.py``.
"""
import numpy as np

from entsaving.channels import amplitude_damping, depolarizing, phi_minus, phi_plus, power
from entsaving.classify import classify
from entsaving.entwit import ppt_min_eig
from entsaving.qubit import es_qubit_param_fit


def show(name, phi):
    c = classify(phi)
    n = c.n_index.kind if c.n_index.n is None else f"{c.n_index.kind}({c.n_index.n})"
    print(f"{name:28s} eb={c.eb.status.value:6s} n_index={n:18s} es={c.es.status:5s} aes={c.aes.status}")


print("classification")
show("amplitude damping p=0.5", amplitude_damping(0.5))
show("depolarizing lam=0.5", depolarizing(0.5, 2))
show("depolarizing lam=0.9", depolarizing(0.9, 2))
show("phi_plus(0.7, 0.3, 0.1, 0.6)", phi_plus(0.7, 0.3, 0.1, 0.6))
show("phi_minus(0.8, 1.0)", phi_minus(0.8, 1.0))

# damping never quite breaks entanglement: the PPT eigenvalue only decays
print("\nppt_min_eig of AD_0.5^n")
ad = amplitude_damping(0.5)
for n in (1, 2, 4, 8, 16):
    print(f"  n={n:2d}  {ppt_min_eig(power(ad, n)): .3e}")

# depolarizing noise is broken after ceil(log(1/3)/log lam) steps
print("\nfirst entanglement-breaking power of depolarizing noise")
for lam in (0.4, 0.6, 0.8, 0.95):
    n = classify(depolarizing(lam, 2)).n_index.n
    print(f"  lam={lam:.2f}  n={n}  closed form {int(np.ceil(np.log(1 / 3) / np.log(lam)))}")

# the Plus family is closed under powers; the fit reads the parameters back
print("\nfitted parameters of phi_plus(0.9, 0.4, 0.05, 0.85)^n")
phi = phi_plus(0.9, 0.4, 0.05, 0.85)
for n in (1, 2, 5):
    p = es_qubit_param_fit(power(phi, n)).params
    print(f"  n={n}  lam={p['lam']:.4f}  mu={p['mu']:.4f}  alpha={p['alpha']:.4f}")
