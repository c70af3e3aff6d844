use semdiv_core::toy::{compare_arms, Scenario};

#[test]
fn dress_raises_sement_on_standard_scenario() {
    let scenario = Scenario::default();
    let runs: Vec<_> = (0..5).map(|s| compare_arms(&scenario, s).unwrap()).collect();
    for r in &runs {
        println!(
            "seed {}: heads {:?} vanilla sem {:.4} head {:.3} | dress sem {:.4} head {:.3}",
            r.seed, r.head_clusters, r.vanilla.final_sem_ent, r.vanilla.final_head_mass,
            r.dress.final_sem_ent, r.dress.final_head_mass
        );
    }
    let mean = |f: &dyn Fn(&semdiv_core::toy::ArmComparison) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let (vs, ds) = (mean(&|r| r.vanilla.final_sem_ent), mean(&|r| r.dress.final_sem_ent));
    let (vh, dh) = (mean(&|r| r.vanilla.final_head_mass), mean(&|r| r.dress.final_head_mass));
    println!("mean sem-ent vanilla {vs:.4} dress {ds:.4}; head mass vanilla {vh:.3} dress {dh:.3}");
    assert!(ds > vs);
    assert!(dh < vh);
}
