//! Cross-module property tests: serialization round-trips, trace-format
//! round-trips, outcome classification, and agreement between the two
//! metric-computation routes.

use proptest::prelude::*;

use backoff_sim::costmodel::{
    detailed_total_time, simple_total_time, transmission_time, PacketShape,
};
use backoff_sim::domain::{
    classify_outcome, Phase, PolicySpec, SlotOutcome, SlotRecord, TimingParams,
};
use backoff_sim::engine::{count_metrics, run_trial, TrialConfig};
use backoff_sim::tracefmt;

fn arb_policy() -> impl Strategy<Value = PolicySpec> {
    prop_oneof![
        Just("beb".to_string()),
        Just("lb".to_string()),
        Just("llb".to_string()),
        Just("llb-rep".to_string()),
        Just("stb".to_string()),
        // fixed windows below ~n/3 resolve too slowly for the runaway bound
        (16u32..64).prop_map(|w| format!("fixed:{w}")),
        (1u32..8).prop_map(|k| format!("bestof:{k}")),
    ]
    .prop_map(|s| s.parse().unwrap())
}

fn arb_transmitters() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0usize..40, 0..6).prop_map(|s| s.into_iter().collect())
}

fn arb_record() -> impl Strategy<Value = SlotRecord> {
    (0u64..10_000, arb_transmitters(), prop_oneof![
        Just(Phase::ContentionWindow),
        Just(Phase::Estimation)
    ])
        .prop_map(|(slot, transmitters, phase)| SlotRecord::new(slot, transmitters, phase))
}

proptest! {
    #[test]
    fn outcome_is_pure_function_of_transmitter_count(transmitters in arb_transmitters()) {
        let outcome = classify_outcome(&transmitters);
        match transmitters.len() {
            0 => prop_assert_eq!(outcome, SlotOutcome::Empty),
            1 => prop_assert_eq!(outcome, SlotOutcome::Success(transmitters[0])),
            k => prop_assert_eq!(outcome, SlotOutcome::Collision(k as u32)),
        }
    }

    #[test]
    fn slot_record_json_roundtrip(record in arb_record()) {
        let text = serde_json::to_string(&record).unwrap();
        let back: SlotRecord = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, record);
    }

    #[test]
    fn trace_line_roundtrip(record in arb_record()) {
        let line = tracefmt::format_record(&record);
        let back = tracefmt::parse_line(&line, 1).unwrap();
        prop_assert_eq!(back, record);
    }

    #[test]
    fn policy_spec_json_roundtrip(policy in arb_policy(), cap in proptest::option::of(1u32..4096)) {
        let spec = PolicySpec { window_cap: cap, ..policy };
        let text = serde_json::to_string(&spec).unwrap();
        let back: PolicySpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn policy_string_roundtrip(policy in arb_policy()) {
        let text = policy.to_string();
        let back: PolicySpec = text.parse().unwrap();
        prop_assert_eq!(back, policy);
    }

    #[test]
    fn timing_params_json_roundtrip(
        slot in 1.0f64..100.0,
        sifs in 1.0f64..50.0,
        gap in 1.0f64..50.0,
        rate in 1.0f64..600.0,
        cap in proptest::option::of(1u32..4096),
    ) {
        let params = TimingParams {
            slot_us: slot,
            sifs_us: sifs,
            difs_us: sifs + gap,
            data_rate_mbps: rate,
            max_window: cap,
            ..TimingParams::default()
        };
        prop_assert!(params.validate().is_ok());
        let text = serde_json::to_string(&params).unwrap();
        let back: TimingParams = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, params);
    }

    #[test]
    fn cost_breakdown_roundtrips_at_resolution(records in proptest::collection::vec(arb_record(), 0..40)) {
        let cost = detailed_total_time(&records, PacketShape::default(), &TimingParams::default());
        let text = serde_json::to_string(&cost).unwrap();
        let back: backoff_sim::costmodel::CostBreakdown = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, cost.rounded());
    }

    #[test]
    fn detailed_cost_dominates_simple_cost(policy in arb_policy(), seed in any::<u64>(), n in 1usize..30) {
        let cfg = TrialConfig::new(n, policy, seed);
        let trace = run_trial(&cfg).unwrap();
        let params = TimingParams::default();
        let shape = PacketShape::default();
        let detailed = detailed_total_time(&trace.records, shape, &params).total_us;
        let simple = simple_total_time(
            trace.stats.disjoint_collisions as f64,
            trace.stats.cw_slots as f64,
            transmission_time(shape, &params),
            &params,
        )
        .unwrap();
        prop_assert!(detailed >= simple, "detailed {detailed} vs simple {simple}");
    }

    #[test]
    fn recounted_metrics_match_engine_stats(policy in arb_policy(), seed in any::<u64>(), n in 1usize..30) {
        let cfg = TrialConfig::new(n, policy, seed);
        let trace = run_trial(&cfg).unwrap();
        let mut recounted = count_metrics(&trace.records);
        recounted.estimates = trace.stats.estimates.clone();
        prop_assert_eq!(recounted, trace.stats);
    }

    #[test]
    fn run_stats_json_roundtrip(policy in arb_policy(), seed in any::<u64>(), n in 1usize..20) {
        let cfg = TrialConfig::new(n, policy, seed);
        let stats = backoff_sim::engine::run_trial_stats(&cfg).unwrap();
        let text = serde_json::to_string(&stats).unwrap();
        let back: backoff_sim::domain::RunStats = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, stats);
    }

    #[test]
    fn completion_slots_are_nondecreasing_with_exact_n_entries(
        policy in arb_policy(),
        seed in any::<u64>(),
        n in 1usize..40,
    ) {
        let stats = backoff_sim::engine::run_trial_stats(&TrialConfig::new(n, policy, seed)).unwrap();
        prop_assert_eq!(stats.completion_slots.len(), n);
        prop_assert!(stats.completion_slots.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(stats.half_done_slot, stats.completion_slots[n.div_ceil(2) - 1]);
        let participations: u64 = stats.per_station_ack_timeouts.iter().sum();
        if stats.estimation_slots == 0 && stats.disjoint_collisions > 0 {
            // every disjoint collision involves at least two stations
            prop_assert!(participations >= 2 * stats.disjoint_collisions);
        }
    }
}
