"""Singular value summary of Q and A for the three model problems.

The tomography problem defaults to a reduced grid; pass ``--full`` for the
50x50 grid with 36 angles and 75 rays (about 20 s and 150 MB).
"""

import argparse
import time

from kaczmarz_tanabe.problems import model_problem_1, model_problem_2, model_problem_3
from kaczmarz_tanabe.row_action import build_sweep_operator
from kaczmarz_tanabe.spectral import spectral_report


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--full", action="store_true", help="full-size tomography problem")
    parser.add_argument("--mp2-n", type=int, default=32)
    args = parser.parse_args()

    tomo = model_problem_3() if args.full else model_problem_3(20, 18, 29)
    cases = [("mp1", model_problem_1()), ("mp2", model_problem_2(args.mp2_n)), ("mp3", tomo)]
    print(f"{'problem':8} {'size':>11} {'max s(Q)':>10} {'2nd s(Q)':>12} {'min+ s(A)':>11} {'unit':>5} {'time':>7}")
    for label, prob in cases:
        t0 = time.perf_counter()
        rep = spectral_report(prob.a, build_sweep_operator(prob.a))
        m, n = prob.a.shape
        print(
            f"{label:8} {f'{m}x{n}':>11} {rep.sigma_max_q:10.6f} {rep.sigma_second_q:12.8f} "
            f"{rep.sigma_min_pos_a:11.5g} {rep.unit_multiplicity:5d} {time.perf_counter() - t0:6.1f}s"
        )


if __name__ == "__main__":
    main()
