"""Exact ground energy of a bundled toy system by full diagonalization.

    python scripts/toy_ground_energy.py [toy4.ferm] [--mapping jw|bk]

Prints the lowest eigenvalue over the whole Fock space and within the
sector holding the electron count of the matching ``.amp`` file, plus the
UCC energy of the bundled amplitudes for comparison.
"""

import argparse

import numpy as np

from qsim.experiments import exact_ucc_energy, particle_number_observable
from qsim.fermion import fermion_to_pauli
from qsim.formats import bundled_text, parse_fermion_file
from qsim.ucc import parse_amplitude_file


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("name", nargs="?", default="toy4.ferm")
    ap.add_argument("--mapping", choices=["jw", "bk"], default="jw")
    args = ap.parse_args()

    n, f = parse_fermion_file(bundled_text(args.name))
    h = fermion_to_pauli(f, args.mapping, n).simplify()
    amps = parse_amplitude_file(bundled_text(args.name.replace(".ferm", ".amp")))

    hm = h.to_matrix()
    energies = np.linalg.eigvalsh(hm)
    # restrict H to the eigenspace of N with the bundled electron count
    occ, basis = np.linalg.eigh(particle_number_observable(n, args.mapping).to_matrix())
    p = basis[:, np.abs(occ - amps.n_electrons) < 1e-8]
    sector = np.linalg.eigvalsh(p.conj().T @ hm @ p)

    print(f"{args.name}: {n} spin-orbitals, {len(h)} Pauli terms ({args.mapping})")
    print(f"  ground energy (all sectors)        {energies[0]: .10f}")
    print(f"  ground energy ({amps.n_electrons} electrons)        {sector.min(): .10f}")
    print(f"  UCC energy of bundled amplitudes   {exact_ucc_energy(amps, args.mapping, h): .10f}")


if __name__ == "__main__":
    main()
