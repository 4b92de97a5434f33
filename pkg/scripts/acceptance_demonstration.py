#!/usr/bin/env python3
"""
Walkthrough of the dgwalk acceptance checks.
Runs every check in-process (no broker needed) and prints a pass/fail line per step.
"""

import sys
import time

from dgwalk.schemas import WalkConfig
from dgwalk.services import spectral, wilson
from dgwalk.services.verification import SuiteScale, run_suites

SMALL_INSTANCES = [(3, 2), (4, 2), (3, 3)]


class AcceptanceDemo:
    def __init__(self, quick: bool = False):
        self.quick = quick
        self.failures = []

    def print_header(self, title):
        print(f"\n{'='*60}")
        print(f"🎯 {title}")
        print(f"{'='*60}")

    def print_step(self, step, description):
        print(f"\n📋 Step {step}: {description}")
        print("-" * 50)

    def report(self, label, ok, detail=""):
        mark = "✅" if ok else "❌"
        print(f"   {mark} {label} {detail}".rstrip())
        if not ok:
            self.failures.append(label)

    def run_suite(self, name, scale):
        started = time.time()
        reports = run_suites([name], scale)
        for r in reports:
            self.report(f"{r.lemma} [{r.mode}] n={r.details.get('n', '-')} q={r.details.get('q', '-')}", r.passed,
                        f"({r.cases_checked} cases)")
        print(f"   ⏱️  {time.time() - started:.1f}s")

    def show_cutoff_window(self):
        self.print_step(1, "Cutoff window shrinks relative to t_nq")
        for n in (10, 20, 50, 100):
            times = spectral.theorem_times(n, 2, spectral.minimum_upper_c(n))
            print(f"   n={n:<4} t_nq={times.t_nq:10.2f}  window/t_nq={times.window_ratio:.3f}")

    def check_exact_small_instances(self, scale):
        self.print_step(2, "Spectral oracle, exact TV and upper endpoint")
        for name in ("spectral_oracle", "tv_exactness", "upper_endpoint", "negative_eigenvalue"):
            self.run_suite(name, scale)
        for n, q in SMALL_INSTANCES:
            spec = spectral.enumerate_spectrum(n, q)
            print(f"   n={n} q={q}: t_mix(1/4) = {spectral.mixing_time(spec, 0.25)}")

    def check_wilson(self, scale):
        self.print_step(3, "Lower-bound statistic")
        self.run_suite("wilson_identity", scale)
        t = wilson.wilson_time(50, 2, 0.75)
        print(f"   wilson_time(50, 2, 3/4) = {t:.1f}")
        if self.quick:
            print("   ⏭️  Monte Carlo check at n=50 skipped (--quick)")
            return
        estimate = wilson.mc_tv_lower_bound(WalkConfig(n=50, q=2, seed=2024), int(t), 10000)
        self.report("MC estimate at wilson_time >= 0.2", estimate >= 0.2, f"({estimate:.3f})")

    def check_sampler(self, scale):
        self.print_step(4, "Sampler against exact distribution")
        self.run_suite("sampler", scale)

    def check_combinatorics(self, scale):
        self.print_step(5, "Combinatorial inequalities and prefix-sum oracles")
        for name in ("lemma3_2", "lemma3_3", "lemma3_5", "min_boxes", "interval_oracle", "box_oracle"):
            self.run_suite(name, scale)

    def run_complete_demonstration(self):
        self.print_header("DGWALK - ACCEPTANCE DEMONSTRATION")
        scale = SuiteScale(trials=1000 if self.quick else 10000, seed=0, acceptance=not self.quick)

        self.show_cutoff_window()
        self.check_exact_small_instances(scale)
        self.check_wilson(scale)
        self.check_sampler(SuiteScale(trials=10**5 if self.quick else 10**6, seed=0))
        self.check_combinatorics(scale)

        self.print_header("DEMONSTRATION COMPLETE")
        if self.failures:
            print(f"❌ {len(self.failures)} check(s) failed:")
            for label in self.failures:
                print(f"   • {label}")
            return 1
        print("🎉 All checks passed")
        return 0


if __name__ == "__main__":
    demo = AcceptanceDemo(quick="--quick" in sys.argv[1:])
    sys.exit(demo.run_complete_demonstration())
