use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use morley_core::analysis::{broken_h2_error, Operand};
use morley_core::element::local_stiffness;
use morley_core::fields::canonical_interpolate;
use morley_core::system::{assemble_load, assemble_stiffness, solve_free};
use morley_core::{
    build_dof_map, build_uniform_mesh, postprocess, reference_basis, vertex_values_of, GridSpec,
    MacroGrid, ManufacturedSolution, QuadRule, SmoothField, SolveOptions, SolverMethod,
    StructuredMesh, VertexSource,
};

const CASES: [(ManufacturedSolution, usize); 2] =
    [(ManufacturedSolution::U1, 24), (ManufacturedSolution::U3, 12)];

fn mesh(u: ManufacturedSolution, n: usize) -> StructuredMesh {
    build_uniform_mesh(GridSpec::unit(u.dim(), n)).unwrap()
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for (u, n) in CASES {
        let m = mesh(u, n);
        let d = build_dof_map(&m);
        let basis = reference_basis(u.dim()).unwrap();
        let rule = QuadRule::new(u.dim(), 5).unwrap();
        g.bench_with_input(BenchmarkId::new("stiffness", format!("{u}/{n}")), &n, |b, _| {
            b.iter(|| assemble_stiffness(&m, &d, &local_stiffness(&basis, m.half())))
        });
        g.bench_with_input(BenchmarkId::new("load", format!("{u}/{n}")), &n, |b, _| {
            b.iter(|| assemble_load(&m, &d, &basis, |x| u.rhs(x), &rule))
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for (u, n) in CASES {
        let m = mesh(u, n);
        let d = build_dof_map(&m);
        let basis = reference_basis(u.dim()).unwrap();
        let a = assemble_stiffness(&m, &d, &local_stiffness(&basis, m.half()));
        let rhs = assemble_load(&m, &d, &basis, |x| u.rhs(x), &QuadRule::new(u.dim(), 5).unwrap());
        for method in [SolverMethod::Cholesky, SolverMethod::ConjugateGradient] {
            let opts = SolveOptions {
                method,
                ..SolveOptions::default()
            };
            g.bench_with_input(BenchmarkId::new(format!("{method:?}"), format!("{u}/{n}")), &n, |b, _| {
                b.iter(|| solve_free(&a, black_box(&rhs), &opts).unwrap())
            });
        }
    }
    g.finish();
}

fn recovery_and_errors(c: &mut Criterion) {
    let mut g = c.benchmark_group("postprocess");
    for (u, n) in CASES {
        let m = mesh(u, n);
        let grid = MacroGrid::new(&m).unwrap();
        let values = vertex_values_of(VertexSource::Exact(&u), &m).unwrap();
        g.bench_with_input(BenchmarkId::new("recover", format!("{u}/{n}")), &n, |b, _| {
            b.iter(|| postprocess(&m, &grid, black_box(&values)).unwrap())
        });
        let d = build_dof_map(&m);
        let basis = reference_basis(u.dim()).unwrap();
        let pi = canonical_interpolate(&m, &d, &u, 5).unwrap();
        let pw = morley_core::fields::field_to_piecewise(&m, &d, &basis, &pi);
        let rule = QuadRule::new(u.dim(), 6).unwrap();
        g.bench_with_input(BenchmarkId::new("broken_h2", format!("{u}/{n}")), &n, |b, _| {
            b.iter(|| broken_h2_error(Operand::Exact(&u), Operand::Piecewise(&pw), &m, &rule).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, solve, recovery_and_errors);
criterion_main!(benches);
