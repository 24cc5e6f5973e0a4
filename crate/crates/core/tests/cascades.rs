//! End-to-end cascade checks: factorization patterns, intermediate states,
//! frequency-tag audits, and stochastic/analytic agreement.

use spdc_cascade::{
    build_cascade, expected_state, leaf_pattern, p_success, simulate_stochastic,
    simulate_with_trace, states_equal, tensor_factor_check, verify_cascade, Amplitude,
    CascadeSpec, Mode, Photon, PhotonState, PhotonTerm, Polarization, Scheme, Sign, TimeBin,
};

use Polarization::{H, V};

fn spec(scheme: Scheme, m: u32) -> CascadeSpec {
    CascadeSpec::new(scheme, m).unwrap()
}

fn spatial_branch(modes: &[&str]) -> Vec<(Mode, TimeBin)> {
    modes
        .iter()
        .map(|m| (Mode::new(m), TimeBin::None))
        .collect()
}

fn timebin_branch(modes: &[&str], bin: TimeBin) -> Vec<(Mode, TimeBin)> {
    modes.iter().map(|m| (Mode::new(m), bin)).collect()
}

#[test]
fn three_photon_spatial_factorizes_as_ghz_product() {
    // (|HVH⟩+|VHV⟩) ⊗ (|c_2c_1b_2⟩+|d_2d_1a_2⟩)
    let v = verify_cascade(&spec(Scheme::PolSpatial, 3)).unwrap();
    let ok = tensor_factor_check(
        &v.observed,
        &[H, V, H],
        &spatial_branch(&["c_2", "c_1", "b_2"]),
        &spatial_branch(&["d_2", "d_1", "a_2"]),
    )
    .unwrap();
    assert!(ok);

    // A wrong polarization pattern must not match.
    let bad = tensor_factor_check(
        &v.observed,
        &[H, H, H],
        &spatial_branch(&["c_2", "c_1", "b_2"]),
        &spatial_branch(&["d_2", "d_1", "a_2"]),
    )
    .unwrap();
    assert!(!bad);
}

#[test]
fn three_photon_time_bin_factorizes_as_ghz_product() {
    // (|HVH⟩+|VHV⟩) ⊗ (t1t1t1 + t2t2t2) on modes b_1, a_1, b.
    let v = verify_cascade(&spec(Scheme::PolTimeBin, 3)).unwrap();
    let modes = ["b_1", "a_1", "b"];
    let ok = tensor_factor_check(
        &v.observed,
        &[H, V, H],
        &timebin_branch(&modes, TimeBin::T1),
        &timebin_branch(&modes, TimeBin::T2),
    )
    .unwrap();
    assert!(ok);
}

#[test]
fn four_photon_time_bin_factorizes_as_ghz_product() {
    let v = verify_cascade(&spec(Scheme::PolTimeBin, 4)).unwrap();
    let modes = ["b_1", "a_1", "b_2", "a_2"];
    let ok = tensor_factor_check(
        &v.observed,
        &[V, H, H, V],
        &timebin_branch(&modes, TimeBin::T1),
        &timebin_branch(&modes, TimeBin::T2),
    )
    .unwrap();
    assert!(ok);
}

#[test]
fn stage_one_golden_states() {
    // Spatial: (1/2)(|HV⟩+|VH⟩)⊗(|a_1a_2⟩+|b_1b_2⟩).
    let circuit = build_cascade(&spec(Scheme::PolSpatial, 4));
    let trace = simulate_with_trace(&circuit, &circuit.pump_state()).unwrap();
    let mut golden = PhotonState::empty();
    let half = Amplitude::new(Sign::Plus, 2);
    for (outer, inner) in [("a_2", "a_1"), ("b_2", "b_1")] {
        for (p_outer, p_inner) in [(V, H), (H, V)] {
            golden
                .add_term(
                    PhotonTerm::new(vec![
                        Photon::new(p_outer, outer),
                        Photon::new(p_inner, inner),
                    ])
                    .unwrap(),
                    half,
                )
                .unwrap();
        }
    }
    assert!(states_equal(&trace.checkpoints[0].1, &golden, false));

    // Time bin: (1/2)(|HV⟩+|VH⟩)_{ab}⊗(|t1t1⟩+|t2t2⟩)_{ab} after the c-port
    // mass is split off and the remainder renormalized.
    let circuit = build_cascade(&spec(Scheme::PolTimeBin, 4));
    let trace = simulate_with_trace(&circuit, &circuit.pump_state()).unwrap();
    let (kept, dropped) = trace.checkpoints[0].1.partition_by_modes(circuit.discard_modes());
    assert_eq!(dropped.as_pow2(), Some(1));
    let stage_one = kept.renormalized().unwrap();
    let mut golden = PhotonState::empty();
    for bin in [TimeBin::T1, TimeBin::T2] {
        for (p_a, p_b) in [(H, V), (V, H)] {
            golden
                .add_term(
                    PhotonTerm::new(vec![
                        Photon::new(p_a, "a").with_timebin(bin),
                        Photon::new(p_b, "b").with_timebin(bin),
                    ])
                    .unwrap(),
                    half,
                )
                .unwrap();
        }
    }
    assert!(states_equal(&stage_one, &golden, false));
}

#[test]
fn no_pump_reaches_output_modes() {
    for scheme in [Scheme::PolSpatial, Scheme::PolTimeBin] {
        for m in 2..=6 {
            let circuit = build_cascade(&spec(scheme, m));
            let trace = simulate_with_trace(&circuit, &circuit.pump_state()).unwrap();
            for (term, _) in trace.final_state.terms() {
                for photon in term.photons() {
                    if circuit.output_modes().contains(&photon.mode) {
                        assert!(
                            !photon.freq.is_pump(),
                            "pump tag in output mode {} (scheme {scheme}, m={m})",
                            photon.mode
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn frequency_tags_form_one_tree_per_term() {
    for scheme in [Scheme::PolSpatial, Scheme::PolTimeBin] {
        for m in 2..=6 {
            let circuit = build_cascade(&spec(scheme, m));
            let trace = simulate_with_trace(&circuit, &circuit.pump_state()).unwrap();
            trace.final_state.check_energy_conservation(1).unwrap();
            // Each kept term carries exactly m leaf tags.
            let (kept, _) = trace
                .final_state
                .partition_by_modes(circuit.discard_modes());
            for (term, _) in kept.terms() {
                assert_eq!(term.len(), m as usize);
            }
        }
    }
}

#[test]
fn expected_state_leaf_pattern_alternates() {
    // The pump-H branch pattern for m=4 is H,V on the first pair and V,H on
    // the second (|HVVH⟩ read in output-mode order d_4 d_3 d_2 d_1).
    let leaves = leaf_pattern(&spec(Scheme::PolSpatial, 4));
    let by_mode: std::collections::BTreeMap<String, Polarization> = leaves
        .iter()
        .map(|(a, _, pol)| (a.label(), *pol))
        .collect();
    assert_eq!(by_mode["d_1"], H);
    assert_eq!(by_mode["d_2"], V);
    assert_eq!(by_mode["d_3"], V);
    assert_eq!(by_mode["d_4"], H);
}

#[test]
fn odd_photon_counts_verify_too() {
    for scheme in [Scheme::PolSpatial, Scheme::PolTimeBin] {
        for m in [5u32, 7] {
            let v = verify_cascade(&spec(scheme, m)).unwrap();
            assert!(v.matches, "scheme {scheme} m={m}");
        }
    }
}

#[test]
fn expected_state_is_normalized_product_form() {
    for scheme in [Scheme::PolSpatial, Scheme::PolTimeBin] {
        for m in 2..=8 {
            let state = expected_state(&spec(scheme, m)).unwrap();
            assert_eq!(state.num_terms(), 4);
            assert!(state.is_normalized());
            for (_, amp) in state.terms() {
                assert_eq!(*amp, Amplitude::new(Sign::Plus, 2));
            }
        }
    }
}

#[test]
fn stochastic_matches_closed_form_on_grid() {
    // Success frequency vs p_success(n=1, m, ps) within 3 standard errors.
    let n = 200_000u64;
    let mut seed = 11u64;
    for m in [2u32, 3, 5] {
        for ps in [0.1f64, 0.5, 0.9] {
            seed += 1;
            let counts =
                simulate_stochastic(&spec(Scheme::PolSpatial, m), n, ps, seed).unwrap();
            let p = p_success(1, m, ps).unwrap();
            let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
            let diff = (counts.success_fraction() - p).abs();
            assert!(
                diff <= 3.0 * sigma,
                "m={m} ps={ps}: |{} - {p}| > 3σ={}",
                counts.success_fraction(),
                3.0 * sigma
            );
        }
    }
}

#[test]
fn circuit_dump_golden_three_photon_spatial() {
    let dump = build_cascade(&spec(Scheme::PolSpatial, 3)).dump();
    let golden = "\
cascade pol-spatial m=3 (2 crystals)
input: 1
  1. HWP(22.5°) @ 1
  2. NPBS 1 → (a+b)
  3. DM [a:pump→a, b:pump→b]
  4. PBS [a:H→a_4, a:V→a_3]
  5. PBS [b:H→b_4, b:V→b_3]
  6. HWP(45°) @ a_3,b_3
  7. ppKTP_1 @ a_4,a_3,b_4,b_3
  8. HWP(45°) @ a_4,b_4
  9. PBS [a_3:H→a_2, a_3:V→a_1, a_4:H→a_1, a_4:V→a_2]
 10. PBS [b_3:H→b_2, b_3:V→b_1, b_4:H→b_1, b_4:V→b_2]
 11. DM [a_1:pump→w_4, a_1:dc→a_1, b_1:pump→w_5, b_1:dc→b_1]
 12. PBS [a_1:H→a_6, a_1:V→a_5]
 13. PBS [b_1:H→b_6, b_1:V→b_5]
 14. HWP(45°) @ a_5,b_5
 15. ppKTP_2 @ a_6,a_5,b_6,b_5
 16. HWP(45°) @ a_6,b_6
 17. PBS [a_5:H→d_2, a_5:V→d_1, a_6:H→d_1, a_6:V→d_2]
 18. PBS [b_5:H→c_2, b_5:V→c_1, b_6:H→c_1, b_6:V→c_2]
 19. LP @ a_2
 20. LP @ b_2
 21. LP @ c_1
 22. LP @ c_2
 23. LP @ d_1
 24. LP @ d_2
outputs: a_2, b_2, c_1, c_2, d_1, d_2
discards: w_4, w_5
";
    assert_eq!(dump, golden);
}

#[test]
fn time_bin_discard_mass_is_half_for_all_sizes() {
    for m in 2..=6 {
        let v = verify_cascade(&spec(Scheme::PolTimeBin, m)).unwrap();
        assert_eq!(v.discarded_mass.as_pow2(), Some(1), "m={m}");
    }
    for m in 2..=6 {
        let v = verify_cascade(&spec(Scheme::PolSpatial, m)).unwrap();
        assert!(v.discarded_mass.value::<f64>() == 0.0, "m={m}");
    }
}
