"""Timing comparison of the compiled and pure-Python stepping kernels.

Each workload runs in a fresh subprocess with SLDELAY_BACKEND forced, so
both routes exercise the full library path (import-time kernel binding
included).  Reported numbers are the best of --repeat runs of each
workload body; the table ends with the compiled/pure speedup.

    python benchmarks/bench_backends.py [--config configs/canonical.json]
                                        [--repeat 3]
"""

import argparse
import os
import subprocess
import sys
from timeit import default_timer

WORKLOADS = ("characteristic-x20", "window-root-n12", "spectrum-1-8")
BACKENDS = ("cython", "python")


def _run_workload(name, config):
    from sldelay.problem import load_problem
    from sldelay.spectrum import characteristic, find_eigenvalues

    spec = load_problem(config)
    if name == "characteristic-x20":
        characteristic(spec, 100.0)  # warm up
        start = default_timer()
        for k in range(20):
            characteristic(spec, 100.0 + k)
        return default_timer() - start
    if name == "window-root-n12":
        start = default_timer()
        find_eigenvalues(spec, 12, 12)
        return default_timer() - start
    if name == "spectrum-1-8":
        start = default_timer()
        find_eigenvalues(spec, 1, 8)
        return default_timer() - start
    raise SystemExit("unknown workload %r" % name)


def _child(args):
    import sldelay.backend

    want = os.environ.get("SLDELAY_BACKEND")
    if sldelay.backend.BACKEND != want:
        raise SystemExit("backend %r did not activate" % want)
    best = min(_run_workload(args.worker, args.config) for _ in range(args.repeat))
    print("%r" % best)


def _parent(args):
    script = os.path.abspath(__file__)
    results = {}
    for backend in BACKENDS:
        env = dict(os.environ, SLDELAY_BACKEND=backend)
        for name in WORKLOADS:
            proc = subprocess.run(
                [
                    sys.executable,
                    script,
                    "--worker",
                    name,
                    "--config",
                    args.config,
                    "--repeat",
                    str(args.repeat),
                ],
                env=env,
                capture_output=True,
                text=True,
            )
            if proc.returncode != 0:
                results[backend, name] = None
            else:
                results[backend, name] = float(proc.stdout.strip())

    width = max(len(n) for n in WORKLOADS)
    print("%-*s  %10s  %10s  %8s" % (width, "workload", "cython [s]", "python [s]", "speedup"))
    for name in WORKLOADS:
        cy = results["cython", name]
        py = results["python", name]
        cy_cell = "%10.4f" % cy if cy is not None else "%10s" % "n/a"
        py_cell = "%10.4f" % py if py is not None else "%10s" % "n/a"
        speed = "%8.1fx" % (py / cy) if cy and py else "%9s" % "n/a"
        print("%-*s  %s  %s  %s" % (width, name, cy_cell, py_cell, speed))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default="configs/canonical.json")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--worker", choices=WORKLOADS, help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.worker:
        _child(args)
    else:
        _parent(args)


if __name__ == "__main__":
    main()
