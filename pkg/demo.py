#!/usr/bin/env python3
"""
NC-Value QRF Demo Script

This script walks through:
1. The noncommutative-value calculus on a single qubit
2. The qubit frame change: pushforward table and case c
3. A lattice translation case with its reports

Usage: python demo.py
"""

import sys
from datetime import datetime

import numpy as np


def print_banner():
    """Print a welcome banner"""
    print("""
╔══════════════════════════════════════════════════════════════╗
║                      NC-Value QRF Demo                       ║
║        Quantum Reference Frames with {f, V, M} values        ║
╚══════════════════════════════════════════════════════════════╝
    """)


def print_section(title: str):
    """Print a section header"""
    print(f"\n{'='*60}")
    print(f" {title}")
    print('='*60)


def fmt(z: complex) -> str:
    z = complex(z)
    return f"{z.real:+.6f}{z.imag:+.6f}i"


def demo_ncvalues():
    """Star product and uncertainty on one qubit"""
    print_section("🧮 Noncommutative values")

    from app.services.ncvalue import ncvalue_of, star, star_commutator, uncertainty
    from app.services.qrf_qubit import sigma
    from app.services.statekit import Role, generic_layout, make_state, qubit_layout

    layout = qubit_layout(Role.A, (Role.B,))
    state = make_state(layout, [np.cos(0.4), np.sin(0.4) * np.exp(0.3j)])
    x, z = sigma(1, Role.B, layout), sigma(3, Role.B, layout)
    vx, vz = ncvalue_of(x, state), ncvalue_of(z, state)

    print(f"State: cos(0.4)|0⟩ + sin(0.4)e^(0.3i)|1⟩ on {layout.describe()}")
    print(f"   f[σ1] = {fmt(vx.f)}   (Δσ1)² = {uncertainty(vx):.6f}")
    print(f"   f[σ3] = {fmt(vz.f)}   (Δσ3)² = {uncertainty(vz):.6f}")
    print(f"   f[σ1 ⋆ σ3] = {fmt(star(vx, vz, state).f)}")
    print(f"   f[[σ1, σ3]⋆] = {fmt(star_commutator(vx, vz, state).f)}  (expect -2i⟨σ2⟩)")

    basis = make_state(generic_layout(2), [1, 0])
    print(f"   eigenstate |0⟩: (Δσ3)² = {uncertainty(ncvalue_of(sigma(3, Role.GENERIC, basis.layout), basis)):.1e}")


def demo_pushforward():
    """Show how the Pauli generators move under the frame change"""
    print_section("🔄 Qubit frame change A → B")

    from app.services.qrf_qubit import commutator_preservation_check, pushforward_table_check

    for name, error in pushforward_table_check():
        status = "✅" if error < 1e-12 else "❌"
        print(f"   {status} {name:<22} error {error:.1e}")
    print(f"\n   commutators preserved to {commutator_preservation_check():.1e}")


def demo_qubit_case_c():
    """Case c: B and C entangled before, C's value re-expressed after"""
    print_section("🎯 Qubit case c")

    from app.services.qrf_qubit import DISCREPANCY_FLAG, QubitScenario, run_qubit_case

    sc = QubitScenario("c", 1.0, 0.5, 0.3)
    report = run_qubit_case(sc, "demo-qubit-c")
    print(f"θ = {sc.theta}, ζ = {sc.zeta}: c = {fmt(sc.c)}, s = {fmt(sc.s)}")
    for rec in report.ncvalues:
        print(f"   [{rec.side:<11}] {rec.observable:<32} f = {fmt(complex(rec.f.re, rec.f.im))}")
    print(f"\n   factor ranks: {report.factor_ranks}")

    flagged = [c for c in report.checks if c.flag == DISCREPANCY_FLAG]
    for c in flagged:
        print(f"\n⚠️  {c.name}")
        print(f"   computed {c.details['computed']:.6f}, printed closed form {c.details['published']:.6f}")

    passed = sum(c.passed for c in report.checks)
    print(f"\n{'✅' if report.all_passed else '❌'} {passed}/{len(report.checks)} checks passed")


def demo_grid_case(case_id: str, n: int = 64):
    """Lattice translation case on an n-site grid"""
    print_section(f"📐 Lattice case {case_id} (N={n})")

    from app.services.qrf_grid import GridBasis, GridScenario, run_grid_case

    grid = GridBasis(n)
    sc = GridScenario(case_id, grid, x_o=3.0, y_o=-2.0, x_1=-4.0, x_2=5.0, y_1=-3.0, y_2=2.0)
    report = run_grid_case(sc, f"demo-grid-{case_id}")

    print(f"   factor ranks: {report.factor_ranks}")
    for c in report.checks[:8]:
        status = "✅" if c.passed else "❌"
        print(f"   {status} {c.name:<44} {c.error:.1e}")
    if len(report.checks) > 8:
        print(f"   ... {len(report.checks) - 8} more")
    return report


def demo_report(report):
    """Write a report to the output directory"""
    print_section("📄 Report")

    from app.services.reporter import reporter

    path = reporter.emit(report, "csv-summary")
    print(f"✅ CSV summary written: {path}")


def main():
    """Run the complete demo"""
    print_banner()

    print(f"Demo started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print(f"Python version: {sys.version.split()[0]}")

    try:
        demo_ncvalues()
        demo_pushforward()
        demo_qubit_case_c()
        demo_grid_case("a")
        report = demo_grid_case("d")
        demo_report(report)

        print_section("🎉 Demo Complete")
        print("\n🚀 Next steps:")
        print("   • python run.py run configs/grid_case_a_momentum.json")
        print("   • python run.py verify all")

    except Exception as e:
        print(f"\n❌ Demo failed: {e}")
        print("\n🔧 Troubleshooting:")
        print("   • Check that all dependencies are installed")
        print("   • Run: pytest")

    print(f"\nDemo completed at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")


if __name__ == "__main__":
    main()
