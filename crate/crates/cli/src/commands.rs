use std::io::Write;
use std::time::Instant;

use stabsym_core::generate::{layered_circuit, Family};
use stabsym_core::init::InitError;
use stabsym_core::oracle::{self, STATE_VECTOR_LIMIT};
use stabsym_core::sampler;
use stabsym_core::{
    draw_assignments, initialize, parse_circuit, sample_compiled, write_shots, Circuit, CompiledCircuit,
    OutputFormat, SampleError, SampleMatrix, SymbolKind,
};

use crate::Failure;

fn parse(text: &str) -> Result<Circuit, Failure> {
    parse_circuit(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn init(circuit: &Circuit) -> Result<CompiledCircuit, Failure> {
    initialize(circuit).map_err(|e: InitError| Failure::Internal(e.to_string()))
}

fn internal(e: SampleError) -> Failure {
    Failure::Internal(e.to_string())
}

fn draw_and_sample(
    compiled: &CompiledCircuit,
    shots: usize,
    seed: u64,
    dump: Option<&mut dyn Write>,
) -> Result<SampleMatrix, Failure> {
    match dump {
        Some(w) => {
            let batch = draw_assignments(&compiled.registry, shots, seed);
            w.write_all(batch.to_text().as_bytes())?;
            w.flush()?;
            sampler::sample(&compiled.expressions, &batch).map_err(internal)
        }
        None => sample_compiled(compiled, shots, seed).map_err(internal),
    }
}

pub fn sample(
    text: &str,
    shots: usize,
    seed: u64,
    format: OutputFormat,
    out: &mut dyn Write,
    mut dump: Option<Box<dyn Write>>,
) -> Result<(), Failure> {
    let circuit = parse(text)?;
    let t0 = Instant::now();
    let compiled = init(&circuit)?;
    let t_init = t0.elapsed();
    let t1 = Instant::now();
    let m = draw_and_sample(&compiled, shots, seed, dump.as_deref_mut().map(|w| w as &mut dyn Write))?;
    let t_sample = t1.elapsed();
    write_shots(&m, format, out)?;
    eprintln!("initialization: {:.6} s", t_init.as_secs_f64());
    eprintln!("sampling: {:.6} s", t_sample.as_secs_f64());
    Ok(())
}

pub fn analyze(text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let circuit = parse(text)?;
    let compiled = init(&circuit)?;
    for (k, e) in compiled.expressions.iter().enumerate() {
        writeln!(out, "m{} = {}", k + 1, e.render())?;
    }
    let registry = &compiled.registry;
    for s in 1..registry.len() {
        let origin = registry.origin(s).expect("dense ids");
        let group = registry.group_of(s).expect("every symbol but s0 has a group");
        let kind = match origin.kind {
            SymbolKind::Fault => "fault",
            SymbolKind::MeasurementRandomness => "measurement-randomness",
            SymbolKind::Constant => "constant",
        };
        let (name, line) = match origin.instruction_index.map(|i| &circuit.instructions[i]) {
            Some(inst) => match inst.param {
                Some(p) => (format!("{}({p})", inst.gate), inst.line),
                None => (inst.gate.to_string(), inst.line),
            },
            None => ("?".to_string(), 0),
        };
        let qubits: Vec<String> = group.qubits.iter().map(|q| q.to_string()).collect();
        let component = if group.symbols.len() > 1 {
            format!(", component {}/{}", origin.component + 1, group.symbols.len())
        } else {
            String::new()
        };
        writeln!(
            out,
            "# s{s}: {kind}, {name} at line {line} on {}{component}, {}",
            qubits.join(" "),
            group.distribution.describe()
        )?;
    }
    Ok(())
}

/// Runs the reference checks. Returns whether all of them passed.
pub fn verify(text: &str, shots: usize, seed: u64, out: &mut dyn Write) -> Result<bool, Failure> {
    let circuit = parse(text)?;
    let compiled = init(&circuit)?;
    let n_m = compiled.num_measurements();
    let mut all_ok = true;

    // Exact agreement under forced symbol values.
    let forced = shots.min(2000);
    let batch = draw_assignments(&compiled.registry, forced, seed);
    let mut mismatches = 0;
    for shot in 0..forced {
        let a = batch.assignment(shot);
        let concrete = oracle::run_concrete_forced(&circuit, &a);
        let symbolic: Vec<bool> = compiled.expressions.iter().map(|e| e.eval(&a)).collect();
        if concrete != symbolic {
            mismatches += 1;
        }
    }
    let ok = mismatches == 0;
    all_ok &= ok;
    writeln!(out, "{} forced-assignment replay: {mismatches} mismatches in {forced} shots", verdict(ok))?;

    let sampled = sample_compiled(&compiled, shots, seed).map_err(internal)?;
    let sampled_shots: Vec<Vec<bool>> = (0..shots)
        .map(|j| {
            let s = sampled.shot(j);
            (0..n_m).map(|k| s.get(k)).collect()
        })
        .collect();

    // Marginals against independent concrete runs.
    let concrete = oracle::run_concrete(&circuit, seed, shots);
    let mut worst = 0.0f64;
    for k in 0..n_m {
        let a = sampled_shots.iter().filter(|s| s[k]).count() as f64 / shots as f64;
        let b = concrete.iter().filter(|s| s[k]).count() as f64 / shots as f64;
        let p = (a + b) / 2.0;
        let sigma = (p * (1.0 - p) * 2.0 / shots as f64).sqrt().max(1.0 / shots as f64);
        worst = worst.max((a - b).abs() / sigma);
    }
    let ok = worst <= 4.0;
    all_ok &= ok;
    writeln!(out, "{} marginals vs concrete simulator: max deviation {worst:.2} sigma over {n_m} measurements", verdict(ok))?;

    // Full distribution against the state vector when it is affordable.
    if circuit.is_noiseless() && circuit.num_qubits() <= STATE_VECTOR_LIMIT && n_m <= 16 {
        let exact = oracle::exact_distribution(&circuit).map_err(|e| Failure::Internal(e.to_string()))?;
        let tvd = oracle::total_variation(&exact, &oracle::empirical_distribution(&sampled_shots));
        let ok = tvd < 0.05;
        all_ok &= ok;
        writeln!(out, "{} distribution vs state vector: total variation {tvd:.4}", verdict(ok))?;
    } else {
        writeln!(out, "skip distribution vs state vector: needs a noiseless circuit with <= {STATE_VECTOR_LIMIT} qubits and <= 16 measurements")?;
    }
    Ok(all_ok)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn bench(
    families: &[Family],
    sizes: &[usize],
    shots: usize,
    seed: u64,
    noise: f64,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    writeln!(out, "family,n,init_seconds,sampling_seconds,shots")?;
    for &family in families {
        for &n in sizes {
            let circuit = layered_circuit(family, n, seed, noise);
            let t0 = Instant::now();
            let compiled = init(&circuit)?;
            let t_init = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let m = sample_compiled(&compiled, shots, seed).map_err(internal)?;
            let t_sample = t1.elapsed().as_secs_f64();
            debug_assert_eq!(m.shots(), shots);
            writeln!(out, "{family},{n},{t_init:.6},{t_sample:.6},{shots}")?;
            out.flush()?;
        }
    }
    Ok(())
}
