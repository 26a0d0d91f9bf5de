import os
import argparse

from progressbar import ProgressBar

local_dir = os.path.dirname(os.path.realpath(__file__))  # noqa
os.sys.path.append(os.path.join(local_dir, os.path.pardir))  # noqa

import sap
from sap.misc import parse_int_list


def enumerate_range(widths, threads=1, kink_simplification=False):
    """Enumerate once for every ``W_max`` in ``widths``."""
    progress = ProgressBar(max_value=len(widths))
    results = {}
    for max_width in progress(widths):
        results[max_width] = sap.enumerate_polygons(
            max_width, threads=threads, kink_simplification=kink_simplification
        ).series
    return results


def first_change(shorter, longer):
    """Smallest ``n`` of ``shorter`` that ``longer`` reports differently."""
    for n, count in shorter.items():
        if longer.terms.get(n) != count:
            return n
    return None


def check_extensions(results):
    """``(W_max, next W_max, n)`` for every consecutive pair of runs that disagrees."""
    failures = []
    widths = sorted(results)
    for small, large in zip(widths, widths[1:]):
        n = first_change(results[small], results[large])
        if n is not None:
            failures.append((small, large, n))
    return failures


def main(argv=None):
    """Check that terms do not change when W_max grows"""

    parser = argparse.ArgumentParser(description=main.__doc__)
    parser.add_argument("widths", type=parse_int_list, help="W_max values, e.g. 3-8")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--kink-simplify", action="store_true")
    args = parser.parse_args(argv)

    print(f"Enumerating W_max in {', '.join(map(str, args.widths))}")
    results = enumerate_range(args.widths, args.threads, args.kink_simplify)

    failures = check_extensions(results)
    for small, large, n in failures:
        print(f"W_max={small}: p_{n} changes with W_max={large}")
    if not failures:
        print("All terms are stable under extension")
    return 1 if failures else 0


if __name__ == "__main__":
    os.sys.exit(main())
