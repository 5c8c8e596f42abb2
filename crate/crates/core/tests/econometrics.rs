mod common;

use common::{normal_equations, r_squared};
use proptest::prelude::*;
use urban_centrality::econometrics::{
    dummy_name, ols_fit, pearson, point_biserial, rank_contingency, render_regression_table, spearman,
    DesignSpec, ModelColumn, Table, INTERCEPT,
};
use urban_centrality::complexity::IncidenceMatrix;
use urban_centrality::sampling::Sampler;

const WARDS: [&str; 4] = ["W00", "W01", "W10", "W11"];
const INDUSTRIES: [&str; 3] = ["I0", "I1", "I2"];

/// y = 1 + 2 pci - 0.5 z + ward + industry effects + noise.
fn planted(n: usize, seed: u64) -> Table {
    let mut rng = Sampler::new(seed);
    let mut pci = Vec::new();
    let mut z = Vec::new();
    let mut ward = Vec::new();
    let mut ind = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let p = rng.uniform();
        let zz = rng.normal(0.0, 1.0);
        let w = rng.below(4) as usize;
        let i = rng.below(3) as usize;
        y.push(1.0 + 2.0 * p - 0.5 * zz + 0.3 * w as f64 - 0.7 * i as f64 + rng.normal(0.0, 0.5));
        pci.push(p);
        z.push(zz);
        ward.push(WARDS[w].to_string());
        ind.push(INDUSTRIES[i].to_string());
    }
    let mut t = Table::new();
    t.push_numeric("y", y).unwrap();
    t.push_numeric("pci", pci).unwrap();
    t.push_numeric("z", z).unwrap();
    t.push_categorical("ward", ward).unwrap();
    t.push_categorical("industry", ind).unwrap();
    t
}

/// Explicit design rows in the fitted term order.
fn design(t: &Table, terms: &[String]) -> Vec<Vec<f64>> {
    let ward = t.categorical("ward").unwrap();
    let ind = t.categorical("industry").unwrap();
    (0..t.n_rows())
        .map(|r| {
            terms
                .iter()
                .map(|term| match term.as_str() {
                    INTERCEPT => 1.0,
                    "pci" | "z" => t.numeric(term).unwrap()[r],
                    other => {
                        let hit = |col: &str, v: &[String]| {
                            WARDS.iter().chain(&INDUSTRIES).any(|l| other == dummy_name(col, l) && v[r] == *l)
                        };
                        f64::from(hit("ward", &ward) || hit("industry", &ind))
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn ols_matches_normal_equations() {
    for seed in 0..10 {
        let t = planted(300, seed);
        let spec = DesignSpec::new("y", &["pci", "z"], &["ward", "industry"]);
        let fit = ols_fit(&t, &spec).unwrap();
        let x = design(&t, &fit.terms);
        let y = t.numeric("y").unwrap();
        let beta = normal_equations(&x, y);
        for (a, b) in fit.coefficients.iter().zip(&beta) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
        assert!((fit.r2 - r_squared(&x, y, &beta)).abs() < 1e-12);
        assert!(fit.adj_r2 <= fit.r2);
        assert_eq!(fit.df_resid, fit.n_obs - fit.terms.len());
        let c = fit.coef("pci").unwrap();
        assert!((c - 2.0).abs() < 3.0 * fit.se("pci").unwrap(), "seed {seed}: {c}");
    }
}

#[test]
fn baseline_choice_leaves_fit_unchanged() {
    let t = planted(200, 3);
    let a = ols_fit(&t, &DesignSpec::new("y", &["pci", "z"], &["ward", "industry"])).unwrap();
    let mut spec = DesignSpec::new("y", &["pci", "z"], &["ward", "industry"]);
    spec.baselines.insert("ward".into(), "W11".into());
    spec.baselines.insert("industry".into(), "I2".into());
    let b = ols_fit(&t, &spec).unwrap();
    for (x, y) in a.fitted.iter().zip(&b.fitted) {
        assert!((x - y).abs() < 1e-9);
    }
    for term in ["pci", "z"] {
        assert!((a.coef(term).unwrap() - b.coef(term).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn report_lists_every_model() {
    let t = planted(100, 1);
    let fit = ols_fit(&t, &DesignSpec::new("y", &["pci"], &["ward"])).unwrap();
    let cols = [
        ModelColumn { dependent: "Y", result: &fit },
        ModelColumn { dependent: "Y", result: &fit },
    ];
    let text = render_regression_table("Planted", &cols, &[("PCI", "pci"), ("Constant", INTERCEPT)]);
    assert!(text.contains("(1)") && text.contains("(2)"));
    assert!(text.contains("ward FE"));
    assert!(text.contains("Observations"));
}

#[test]
fn nested_contingency_beats_random() {
    let n = 50;
    let rows: Vec<Vec<u8>> = (0..n).map(|r| (0..n).map(|c| u8::from(c <= r)).collect()).collect();
    let inc = IncidenceMatrix::from_binary(&rows).unwrap();
    let div: Vec<f64> = (0..n).map(|r| r as f64).collect();
    let ubi: Vec<f64> = (0..n).map(|c| (n - c) as f64).collect();
    // Products ranked by complexity: rarer is more complex.
    let pci: Vec<f64> = ubi.iter().map(|u| -u).collect();
    let nested = rank_contingency(&div, &pci, &inc, 5, ("eci", "pci")).unwrap();
    for row in &nested.density {
        assert!(row.windows(2).all(|w| w[0] >= w[1]), "{row:?}");
    }
    let fill = rows.iter().flatten().filter(|&&v| v == 1).count() as f64 / (n * n) as f64;
    let random = common::random_matrix(n, n, fill, 5);
    let rinc = IncidenceMatrix::from_binary(&random).unwrap();
    let rdiv: Vec<f64> = rinc.diversity().iter().map(|&d| d as f64).collect();
    let rpci: Vec<f64> = rinc.ubiquity().iter().map(|&u| -(u as f64)).collect();
    let rand = rank_contingency(&rdiv, &rpci, &rinc, 5, ("eci", "pci")).unwrap();
    assert!(rand.monotonicity_score() < nested.monotonicity_score());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn point_biserial_is_pearson(seed in 0u64..100_000, n in 3usize..60) {
        let mut rng = Sampler::new(seed);
        let mut b: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.5)).collect();
        b[0] = true;
        b[1] = false;
        let y: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 3.0)).collect();
        let x: Vec<f64> = b.iter().map(|&v| f64::from(v)).collect();
        prop_assert!((point_biserial(&b, &y).unwrap() - pearson(&x, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_invariance(seed in 0u64..100_000, a in 0.1f64..10.0, c in -100.0f64..100.0) {
        let mut rng = Sampler::new(seed);
        let x: Vec<f64> = (0..30).map(|_| rng.normal(0.0, 1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.normal(0.0, 1.0)).collect();
        let tx: Vec<f64> = x.iter().map(|v| a * v + c).collect();
        prop_assert!((pearson(&x, &y).unwrap() - pearson(&tx, &y).unwrap()).abs() < 1e-12);
        prop_assert!((spearman(&x, &y).unwrap() - spearman(&tx, &y).unwrap()).abs() < 1e-12);
    }
}
