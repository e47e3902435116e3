use morley_core::analysis::{run_study, Quantity, StudyOptions};
use morley_core::{Error, ManufacturedSolution, SolveOptions, SolverMethod};

#[test]
fn u1_study_behaves() {
    let report = run_study(2, ManufacturedSolution::U1, &[6, 12, 24], &StudyOptions::default()).unwrap();
    assert!(report.failures.is_empty());
    let recs = &report.records;
    for r in recs {
        // |u - u_h| <= |u - Π_h u| + |Π_h u - u_h|
        assert!(r.err1 <= r.interp_error + r.err2 + 1e-12);
        assert!(r.diagnostics.solver_residual <= 1e-12 || r.diagnostics.solver_backward_error <= 1e-15);
    }
    for q in Quantity::ALL {
        for w in recs.windows(2) {
            assert!(w[1].get(q) < w[0].get(q), "{q:?} not decreasing");
        }
    }
    let last = recs.len() - 1;
    let first_order = report.rate(last, Quantity::Err1).unwrap();
    assert!((0.9..=1.1).contains(&first_order), "Err1 rate {first_order}");
    for q in [Quantity::Corrected, Quantity::PostSolution] {
        let r = report.rate(last, q).unwrap();
        assert!((1.9..=2.1).contains(&r), "{q:?} rate {r}");
    }
}

#[test]
fn solvers_agree() {
    let cg = StudyOptions {
        solver: SolveOptions {
            method: SolverMethod::ConjugateGradient,
            ..SolveOptions::default()
        },
        ..StudyOptions::default()
    };
    for (dim, u) in [(2, ManufacturedSolution::U2), (3, ManufacturedSolution::U4)] {
        let a = run_study(dim, u, &[6], &StudyOptions::default()).unwrap();
        let b = run_study(dim, u, &[6], &cg).unwrap();
        for q in Quantity::ALL {
            let (x, y) = (a.records[0].get(q), b.records[0].get(q));
            assert!(((x - y) / x).abs() < 1e-8, "{u} {q:?}: {x} vs {y}");
        }
    }
}

#[test]
fn study_input_is_validated() {
    let opts = StudyOptions::default();
    let u = ManufacturedSolution::U3;
    assert!(matches!(run_study(3, u, &[5], &opts), Err(Error::MacroDivisibility(5))));
    assert!(run_study(2, u, &[6], &opts).is_err());
    assert!(run_study(3, u, &[], &opts).is_err());
    assert!(run_study(3, u, &[12, 6], &opts).is_err());
    assert!(run_study(4, u, &[6], &opts).is_err());
}

#[test]
fn single_level_has_no_rates() {
    let report = run_study(2, ManufacturedSolution::U2, &[3], &StudyOptions::default()).unwrap();
    assert_eq!(report.records.len(), 1);
    for q in Quantity::ALL {
        assert!(report.rate(0, q).is_none());
    }
}
