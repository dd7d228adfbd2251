//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line;
//! run with `--nocapture` to see them. The tests hold a shared lock so the
//! timing measurements are not disturbed by each other.

mod common;

use std::io::{self, Cursor, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use common::oracle::{expected_outcome, random_case};
use common::*;
use forage::context::{current_processing_power, SurrogateContext, MIB};
use forage::estimator::{estimate_execution_time, estimate_local, estimate_offload, transfer_time};
use forage::harness::{run_scenario, Scenario, Strategy};
use forage::order::EvalError;
use forage::runtime::{handle_connection, Frame, MsgType, RemoteClient, Server};
use forage::solver::{decide, CostMode, Outcome, Problem, SolverWeights};
use forage::workloads::{
    encode_matrix, encode_prime_index, Matrix, MatrixDeterminantTask, NthPrimeTask, TaskRegistry, MATRIX_DETERMINANT,
    NTH_PRIME,
};
use forage::OrderExpr;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, title: &str, failures: &[String], detail: &str) {
    if failures.is_empty() {
        println!("PASS criterion {id}: {title} ({detail})");
    } else {
        println!("FAIL criterion {id}: {title} ({detail})");
        for f in failures {
            println!("    {f}");
        }
        panic!("criterion {id} failed: {}", failures.join("; "));
    }
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        failures.push(what());
    }
}

#[test]
fn criterion_1_solver_matches_brute_force_oracle() {
    let _guard = serial();
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut tally = [0usize; 3];
    for i in 0..CASES {
        let case = random_case(&mut rng);
        let problem = Problem {
            mobile: &case.mobile,
            surrogates: &case.surrogates,
            links: &case.links,
            app: &case.app,
            input_value: case.input_value,
            input_bytes: case.input_bytes,
        };
        let got = decide(&problem, &case.weights, case.mode).unwrap().outcome;
        let want = expected_outcome(&case);
        tally[match want {
            Outcome::Local => 0,
            Outcome::Offload(_) => 1,
            Outcome::Infeasible => 2,
        }] += 1;
        if got != want && failures.len() < 5 {
            failures.push(format!("case {i}: decide={got} oracle={want}"));
        }
    }
    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}, limit 10 s")
    });
    report(
        1,
        "decide() agrees with brute-force argmin",
        &failures,
        &format!(
            "{CASES} cases, local/offload/infeasible = {}/{}/{}, {elapsed:.2?}",
            tally[0], tally[1], tally[2]
        ),
    );
}

/// Smallest integer N at which offloading is strictly faster, found by
/// bisection on the directly written time formulas.
fn crossover_by_bisection() -> u64 {
    let app = nth_prime_app();
    let up = app.code_size + app.base_input_size.max(8.0);
    let down = app.base_output_size;
    let local = |n: f64| nth_prime_instructions(n) / 5.28e8;
    let remote = |n: f64| up / MIB + nth_prime_instructions(n) / 2.5e9 + down / MIB;
    let offload_wins = |n: u64| remote(n as f64) < local(n as f64);
    let (mut lo, mut hi) = (3u64, 100_000u64);
    assert!(!offload_wins(lo) && offload_wins(hi));
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if offload_wins(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn criterion_2_solver_follows_the_time_envelope() {
    let _guard = serial();
    let start = Instant::now();
    let mut failures = Vec::new();

    let mut scenario = Scenario::from_file(&scenario("nth-prime-response.xml")).unwrap();
    check(&mut failures, scenario.mobile.instructions_per_second == 5.28e8, || "mobile ips".into());
    check(&mut failures, scenario.surrogates[0].instructions_per_second == 2.5e9, || "surrogate ips".into());
    check(&mut failures, scenario.link.data_transmission_rate == MIB, || "link rate".into());

    let crossover = crossover_by_bisection();
    let sweep = [1_000u64, 3_000, 10_000, 30_000, 100_000];
    scenario.config.sweep = sweep.to_vec();
    scenario.config.sweep.extend([crossover - 1, crossover]);
    let rows = run_scenario(&scenario, &TaskRegistry::with_builtin()).unwrap();
    let time = |n: u64, s: Strategy| {
        rows.iter()
            .find(|r| r.input_value == n && r.strategy == s)
            .and_then(|r| r.meas_time_s)
            .unwrap()
    };
    let decision = |n: u64| {
        rows.iter()
            .find(|r| r.input_value == n && r.strategy == Strategy::Solver)
            .unwrap()
            .decision
            .clone()
    };
    for &n in scenario.config.sweep.iter() {
        let (local, offload, solver) = (time(n, Strategy::Local), time(n, Strategy::Offload), time(n, Strategy::Solver));
        check(&mut failures, solver == local.min(offload), || {
            format!("N={n}: solver {solver} vs local {local}, offload {offload}")
        });
    }
    check(&mut failures, decision(crossover - 1) == "local", || {
        format!("N={} should run locally", crossover - 1)
    });
    check(&mut failures, decision(crossover) == "offload", || format!("N={crossover} should offload"));

    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(5), || format!("took {elapsed:?}, limit 5 s"));
    report(
        2,
        "solver time is min(local, offload); local-to-offload crossover at bisection N",
        &failures,
        &format!("sweep {sweep:?}, crossover N = {crossover}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_3_solver_follows_the_energy_envelope() {
    let _guard = serial();
    let start = Instant::now();
    let mut failures = Vec::new();
    let scenario = Scenario::from_file(&scenario("determinant-energy.xml")).unwrap();
    let m = &scenario.mobile;
    check(
        &mut failures,
        m.power_comp == m.power_send && m.power_send == m.power_receive && m.power_receive == m.power_standby,
        || "power rates are not all equal".into(),
    );
    check(&mut failures, scenario.config.weights == SolverWeights::energy_only(), || "weights".into());
    check(&mut failures, scenario.config.sweep == (4..=10).collect::<Vec<_>>(), || "sweep".into());
    let rows = run_scenario(&scenario, &TaskRegistry::with_builtin()).unwrap();
    let mut choices = Vec::new();
    for n in 4u64..=10 {
        let get = |s: Strategy| rows.iter().find(|r| r.input_value == n && r.strategy == s).unwrap();
        let (local, offload, solver) = (get(Strategy::Local), get(Strategy::Offload), get(Strategy::Solver));
        let (l, o, s) = (
            local.est_energy_j.unwrap(),
            offload.est_energy_j.unwrap(),
            solver.est_energy_j.unwrap(),
        );
        check(&mut failures, s == l.min(o), || format!("N={n}: solver {s} vs local {l}, offload {o}"));
        choices.push(format!("{n}:{}", solver.decision));
    }
    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(5), || format!("took {elapsed:?}, limit 5 s"));
    report(
        3,
        "solver energy is min(local, offload) for N in 4..=10",
        &failures,
        &format!("{}, {elapsed:.2?}", choices.join(" ")),
    );
}

#[test]
fn criterion_4_cost_model_values() {
    let _guard = serial();
    let mut failures = Vec::new();
    let close = |got: f64, want: f64| rel_err(got, want) <= 1e-9;

    // Processing power.
    for (usage, ips, want) in [(1.0, 5.28e8, 0.0), (0.0, 2.5e9, 2.5e9), (0.5, 5.28e8, 2.64e8)] {
        let got = current_processing_power(usage, ips).unwrap();
        check(&mut failures, close(got, want), || format!("P_c({usage}, {ips}) = {got}, want {want}"));
    }
    check(&mut failures, current_processing_power(1.5, 1.0).is_err(), || "usage 1.5 accepted".into());

    // Local energy, from the frozen order value at N = 10 000.
    let order = 38_646_250.951_519_39;
    let app = nth_prime_app();
    let mobile = bundled_mobile();
    let local = estimate_local(&app, 1e4, &mobile).unwrap();
    check(&mut failures, close(local.time, order / 5.28e8), || format!("local time {}", local.time));
    check(&mut failures, close(local.energy, order / 5.28e8 * 0.9), || format!("local energy {}", local.energy));
    check(&mut failures, (local.energy - 0.0659).abs() < 5e-5, || format!("local energy {}", local.energy));
    let mut idle = mobile.clone();
    idle.power_comp = 0.0;
    check(&mut failures, estimate_local(&app, 1e4, &idle).unwrap().energy == 0.0, || "zero power".into());

    // Transfer time.
    for (bytes, rate, want) in [(1024.0, 1024.0, 1.0), (0.0, 3.0, 0.0), (1_075_200.0, 675_840.0, 1.590_909_090_909_091)] {
        let got = transfer_time(bytes, rate).unwrap();
        check(&mut failures, close(got, want), || format!("{bytes} B / {rate} B/s = {got}, want {want}"));
    }

    // Additivity and equal-power collapse over random inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    for i in 0..1_000 {
        let n = rng.random_range(3.0..1e6);
        let mut m = mobile.clone();
        let p = rng.random_range(0.01..5.0);
        m.power_comp = p;
        m.power_send = p;
        m.power_receive = p;
        m.power_standby = p;
        let s = SurrogateContext {
            instructions_per_second: rng.random_range(1e8..1e11),
            cpu_usage: rng.random_range(0.0..=1.0),
            ..bundled_surrogate()
        };
        let l = link(rng.random_range(1e2..1e9));
        let bytes = rng.random_range(0.0..1e6);
        let est = estimate_offload(&app, n, bytes, &m, &s, &l).unwrap();
        check(&mut failures, est.time == est.t_send + est.t_exec + est.t_recv, || {
            format!("input {i}: offload time not additive")
        });
        check(&mut failures, rel_err(est.energy, p * est.time) <= 1e-12, || {
            format!("input {i}: offload energy {} vs {}", est.energy, p * est.time)
        });
        let loc = estimate_local(&app, n, &m).unwrap();
        check(&mut failures, rel_err(loc.energy, p * loc.time) <= 1e-12, || {
            format!("input {i}: local energy {} vs {}", loc.energy, p * loc.time)
        });
    }
    report(
        4,
        "processing power, local energy and transfer time values; additivity and collapse",
        &failures,
        "tolerance 1e-9, 1 000 random inputs",
    );
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn r_squared(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

#[test]
fn criterion_5_decision_overhead_is_linear() {
    let _guard = serial();
    let mobile = bundled_mobile();
    let app = nth_prime_app();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0005);
    let mut points = Vec::new();
    let mut at_100 = Duration::ZERO;
    for n in [1usize, 10, 100] {
        let surrogates: Vec<SurrogateContext> = (0..n)
            .map(|i| SurrogateContext {
                name: format!("s{i}"),
                instructions_per_second: rng.random_range(1e9..1e10),
                ..bundled_surrogate()
            })
            .collect();
        let links: Vec<_> = (0..n).map(|_| link(rng.random_range(1e5..1e7))).collect();
        let problem = Problem {
            mobile: &mobile,
            surrogates: &surrogates,
            links: &links,
            app: &app,
            input_value: 1e4,
            input_bytes: 8.0,
        };
        let w = SolverWeights::time_only();
        for _ in 0..50 {
            decide(&problem, &w, CostMode::Raw).unwrap();
        }
        let samples: Vec<f64> = (0..501)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(decide(&problem, &w, CostMode::Raw).unwrap());
                t.elapsed().as_secs_f64()
            })
            .collect();
        let t = median(samples);
        if n == 100 {
            at_100 = Duration::from_secs_f64(t);
        }
        points.push((n as f64, t));
    }
    let r2 = r_squared(&points);
    let mut failures = Vec::new();
    check(&mut failures, r2 >= 0.9, || format!("R^2 = {r2:.4}"));
    check(&mut failures, at_100 < Duration::from_millis(10), || format!("n = 100 took {at_100:?}"));
    let detail = points
        .iter()
        .map(|(n, t)| format!("n={n}: {:.1} us", t * 1e6))
        .collect::<Vec<_>>()
        .join(", ");
    report(5, "decide() time is linear in the surrogate count", &failures, &format!("{detail}, R^2 = {r2:.4}"));
}

/// In-memory connection: reads come from a fixed buffer, writes are kept.
struct Scripted {
    input: Cursor<Vec<u8>>,
    output: Vec<u8>,
}

impl Read for Scripted {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.input.read(buf)
    }
}

impl Write for Scripted {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.output.extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn fuzz_registry() -> TaskRegistry {
    let mut registry = TaskRegistry::new();
    registry.register(NthPrimeTask { max_index: 10_000 });
    registry.register(MatrixDeterminantTask { max_dim: 8 });
    registry
}

/// A random byte stream: pure noise, or a valid frame sequence damaged in
/// a random way.
fn fuzz_stream(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let noise = |rng: &mut ChaCha8Rng, len: usize| {
        let mut v = vec![0u8; len];
        rng.fill_bytes(&mut v);
        v
    };
    match rng.random_range(0..6) {
        0 => {
            let len = rng.random_range(0..64);
            noise(rng, len)
        }
        1 => {
            // Valid header, random type and length, random body.
            let mut v = b"CFOR\x01".to_vec();
            v.push(rng.random_range(0..8));
            v.extend_from_slice(&rng.random::<u32>().to_be_bytes());
            let len = rng.random_range(0..128);
            v.extend(noise(rng, len));
            v
        }
        _ => {
            let frame = match rng.random_range(0..4) {
                0 => Frame::task_request(NTH_PRIME, &encode_prime_index(rng.random_range(0..20_000))),
                1 => Frame::task_request(MATRIX_DETERMINANT, &encode_matrix(&Matrix::random(rng.random_range(1..6), rng.random()))),
                2 => Frame::new(MsgType::Ping, noise(rng, 4)),
                _ => {
                    let len = rng.random_range(0..40);
                    Frame::new(MsgType::TaskRequest, noise(rng, len))
                }
            };
            let mut v = frame.encode();
            for _ in 0..rng.random_range(1..4) {
                match rng.random_range(0..3) {
                    0 => {
                        let i = rng.random_range(0..v.len());
                        v[i] ^= 1 << rng.random_range(0..8);
                    }
                    1 => {
                        let cut = rng.random_range(0..=v.len());
                        v.truncate(cut);
                    }
                    _ => {
                        let i = rng.random_range(0..v.len().max(1));
                        v.insert(i.min(v.len()), rng.random());
                    }
                }
                if v.is_empty() {
                    break;
                }
            }
            v
        }
    }
}

#[test]
fn criterion_6_location_transparency_and_fuzzing() {
    let _guard = serial();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0006);
    let local = TaskRegistry::with_builtin();
    let server = Server::bind("127.0.0.1:0", bundled_surrogate(), TaskRegistry::with_builtin())
        .unwrap()
        .spawn()
        .unwrap();
    let client = RemoteClient::new(server.addr().to_string());

    let mut inputs: Vec<(&str, Vec<u8>)> = Vec::new();
    for _ in 0..100 {
        inputs.push((NTH_PRIME, encode_prime_index(rng.random_range(1..=10_000))));
    }
    for _ in 0..100 {
        let dim = rng.random_range(1..=8);
        inputs.push((MATRIX_DETERMINANT, encode_matrix(&Matrix::random(dim, rng.random()))));
    }
    let mut identical = 0;
    for (task, input) in &inputs {
        let want = local.execute(task, input).unwrap();
        match client.execute(task, input) {
            Ok(got) if got.output == want => identical += 1,
            Ok(_) => failures.push(format!("{task}: remote output differs")),
            Err(e) => failures.push(format!("{task}: {e}")),
        }
    }

    // Fuzzing: most streams go straight through the connection handler the
    // daemon uses; a share goes over real sockets to a live daemon.
    const STREAMS: usize = 100_000;
    const OVER_SOCKET: usize = 2_000;
    let registry = fuzz_registry();
    let fuzz_daemon = Server::bind("127.0.0.1:0", bundled_surrogate(), fuzz_registry())
        .unwrap()
        .spawn()
        .unwrap();
    let start = Instant::now();
    for i in 0..STREAMS {
        let bytes = fuzz_stream(&mut rng);
        if i % (STREAMS / OVER_SOCKET) == 0 {
            let mut stream = TcpStream::connect(fuzz_daemon.addr()).unwrap();
            stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
            // The daemon may close early on garbage; that is not an error.
            let _ = stream.write_all(&bytes);
            let _ = stream.shutdown(Shutdown::Write);
            let mut sink = Vec::new();
            let _ = stream.read_to_end(&mut sink);
        } else {
            let mut conn = Scripted {
                input: Cursor::new(bytes),
                output: Vec::new(),
            };
            handle_connection(&mut conn, &registry);
        }
    }
    let fuzz_time = start.elapsed();
    check(&mut failures, fuzz_daemon.is_running(), || "fuzzed daemon stopped".into());
    let health = RemoteClient::new(fuzz_daemon.addr().to_string())
        .execute(NTH_PRIME, &encode_prime_index(25))
        .map(|e| e.output);
    check(&mut failures, health.as_ref().is_ok_and(|out| out[..] == 97u64.to_be_bytes()), || {
        format!("fuzzed daemon health check: {health:?}")
    });
    fuzz_daemon.shutdown().unwrap();
    server.shutdown().unwrap();

    report(
        6,
        "remote output equals local output; daemon survives fuzzing",
        &failures,
        &format!(
            "{identical}/{} identical over loopback, {STREAMS} fuzz streams ({OVER_SOCKET} over sockets) in {fuzz_time:.2?}",
            inputs.len()
        ),
    );
}

#[test]
fn criterion_7_order_expression_values() {
    let _guard = serial();
    let mut failures = Vec::new();
    let expr = OrderExpr::parse(NTH_PRIME_ORDER).unwrap();
    let got = expr.eval(1e4).unwrap();
    let direct = nth_prime_instructions(1e4);
    check(&mut failures, rel_err(got, direct) <= 1e-9, || format!("N=1e4: {got} vs {direct}"));
    check(&mut failures, rel_err(got, 38_646_250.951_519_39) <= 1e-9, || format!("N=1e4: {got}"));

    let fact = OrderExpr::parse("N!").unwrap();
    let mut exact: u128 = 1;
    for n in 1..=20u32 {
        exact *= u128::from(n);
        let got = fact.eval(f64::from(n)).unwrap();
        check(&mut failures, rel_err(got, exact as f64) <= 1e-9, || format!("{n}! = {got}, want {exact}"));
    }
    let overflow = fact.eval(200.0);
    check(&mut failures, matches!(overflow, Err(EvalError::Overflow)), || format!("200! gave {overflow:?}"));

    // Keep the estimator honest about the same value.
    let t = estimate_execution_time(&nth_prime_app(), 1e4, 5.28e8).unwrap();
    check(&mut failures, rel_err(t, direct / 5.28e8) <= 1e-9, || format!("execution time {t}"));
    report(7, "order expressions evaluate correctly", &failures, &format!("order(1e4) = {got:.6}"));
}

#[test]
fn criterion_8_runs_are_byte_identical() {
    let _guard = serial();
    let mut failures = Vec::new();
    let dir = std::env::temp_dir().join(format!("forage-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut sizes = Vec::new();
    for name in ["nth-prime-response.xml", "determinant-energy.xml"] {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|run| {
                let out = dir.join(format!("{name}.{run}.csv"));
                let status = Command::new(env!("CARGO_BIN_EXE_forage"))
                    .args(["run", "--scenario"])
                    .arg(scenario(name))
                    .arg("--out")
                    .arg(&out)
                    .env("FORAGE_LOG", "error")
                    .status()
                    .unwrap();
                assert!(status.success(), "forage run {name} failed");
                std::fs::read(&out).unwrap()
            })
            .collect();
        check(&mut failures, outputs[0] == outputs[1], || format!("{name}: runs differ"));
        sizes.push(format!("{name}: {} bytes", outputs[0].len()));
    }
    std::fs::remove_dir_all(&dir).unwrap();
    report(8, "forage run output is byte-identical across runs", &failures, &sizes.join(", "));
}
