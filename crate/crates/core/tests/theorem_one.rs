use cellfree_core::channel::{CVector, ChannelEstimate};
use cellfree_core::linklevel::{conditional_moments, mrc_conditional_sinr, LinkPowers};
use cellfree_core::ostbc::OstbcCode;
use cellfree_core::rng::{complex_normal, seeded};
use cellfree_core::snr::{snr_ls, theorem1_terms};
use num_complex::Complex64;
use rand::Rng;

fn random_setting(code: &OstbcCode, rng: &mut impl Rng) -> (ChannelEstimate, LinkPowers) {
    let beta: Vec<f64> = (0..code.n_groups).map(|_| rng.random_range(0.2..3.0)).collect();
    let powers = LinkPowers {
        rho_p: rng.random_range(0.1..5.0),
        rho_d: rng.random_range(0.5..10.0),
        tau_p: code.n_groups + rng.random_range(0..3usize),
        es: 1.0,
    };
    let e = powers.pilot_energy();
    let h_hat = CVector::from_fn(code.n_groups, |k, _| complex_normal(rng, beta[k] + 1.0 / e));
    (ChannelEstimate::new(h_hat, &beta, e).unwrap(), powers)
}

fn within(mc: f64, se: f64, exact: f64, k: f64) -> bool {
    (mc - exact).abs() <= k * se + 1e-12 * exact.abs()
}

#[test]
fn conditional_moments_match_closed_form() {
    for code in [OstbcCode::alamouti(), OstbcCode::rate_three_quarters()] {
        let mut rng = seeded(2024);
        let mut hits = 0;
        for cfg in 0..20 {
            let (est, p) = random_setting(&code, &mut rng);
            let n = cfg % code.n_symbols;
            let t = theorem1_terms(&code, n, &est, p.rho_d, p.es).unwrap();
            let m = conditional_moments(&code, n, &est, &p, 100_000, &mut rng).unwrap();
            let ok = within(m.cross.re / p.es, m.cross_se.re / p.es, t.c_n.re, 3.0)
                && within(m.cross.im / p.es, m.cross_se.im / p.es, t.c_n.im, 3.0)
                && within(m.eta_power, m.eta_power_se, t.eta_power, 3.0)
                && within(m.z_power, m.z_power_se, t.z_power, 3.0);
            if !ok {
                eprintln!(
                    "{} cfg {cfg}: c={} mc={} eta={} mc={}±{}",
                    code.name, t.c_n, m.cross, t.eta_power, m.eta_power, m.eta_power_se
                );
            }
            hits += usize::from(ok);
        }
        assert!(hits >= 19, "{}: {hits}/20", code.name);
    }
}

#[test]
fn mrc_attains_sum_of_branches() {
    let code = OstbcCode::alamouti();
    let mut rng = seeded(77);
    let (a, p) = random_setting(&code, &mut rng);
    let (mut b, _) = random_setting(&code, &mut rng);
    b = ChannelEstimate::new(b.h_hat, &[0.7, 1.4], p.pilot_energy()).unwrap();
    let sum: f64 = [&a, &b]
        .iter()
        .map(|e| snr_ls(&code, 0, e, p.rho_d, p.es).unwrap().value)
        .sum();
    let m = mrc_conditional_sinr(&code, 0, &[a, b], &p, 10_000, &mut rng).unwrap();
    assert!((m.value - sum).abs() < 3.0 * m.se, "{} vs {sum} ± {}", m.value, m.se);
}

#[test]
fn single_group_cross_term() {
    let code = OstbcCode::single();
    let mut rng = seeded(9);
    let beta = 0.8;
    let p = LinkPowers {
        rho_p: 1.5,
        rho_d: 2.0,
        tau_p: 2,
        es: 1.0,
    };
    let est = ChannelEstimate::new(
        CVector::from_element(1, Complex64::new(0.9, -0.3)),
        &[beta],
        p.pilot_energy(),
    )
    .unwrap();
    let m = conditional_moments(&code, 0, &est, &p, 100_000, &mut rng).unwrap();
    let g = est.h_hat[0].norm_sqr();
    let expected = -p.rho_d.sqrt() * g / (1.0 + p.pilot_energy() * beta);
    assert!(within(m.cross.re, m.cross_se.re, expected, 3.0));
}
