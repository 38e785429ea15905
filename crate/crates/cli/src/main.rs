mod wavefile;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use vlcphy::channel::{Channel, ChannelConfig};
use vlcphy::fec::cc::{CONSTRAINT_LENGTH, GENERATORS};
use vlcphy::fec::{CcCode, FecScheme, GaloisField};
use vlcphy::framing::{assemble_frame, shr, Mhr, Topology, SHR_LEN};
use vlcphy::harness::{ber_sweep, run_loopback_with, transmit, LoopbackConfig, SweepSpec};
use vlcphy::mode::{list_modes, lookup_mode, CcRate, Modulation, OperatingMode, PhyType};
use vlcphy::modem::{
    estimate_levels, ook_demodulate, vppm_demodulate, DimmingConfig, OokLevels, Waveform,
};
use vlcphy::receiver::{
    recover_timing, Receiver, RxConfig, RxFailure, RxFrame, RxProfile,
};

#[derive(Parser)]
#[command(name = "vlcphy", version, about = "Visible light PHY transceiver and link simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// PHY type, 1 or 2.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    phy: u8,
    /// Mode index within the PHY.
    #[arg(long, global = true, default_value_t = 0)]
    mode: usize,
    /// Target brightness in percent.
    #[arg(long, global = true, default_value_t = 50, value_parser = clap::value_parser!(u8).range(0..=100))]
    dimming: u8,
    /// OOK dimming method.
    #[arg(long, global = true, value_enum, default_value_t = OokMethod::Level)]
    ook_dimming: OokMethod,
    /// Samples per optical clock slot.
    #[arg(long, global = true, default_value_t = 4)]
    oversample: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Channel configuration file (JSON).
    #[arg(long, global = true)]
    channel: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OokMethod {
    Level,
    Compensation,
}

#[derive(Subcommand)]
enum Command {
    /// Print the operating mode table.
    Modes {
        /// One comma-separated record per mode.
        #[arg(long)]
        csv: bool,
    },
    /// Print field polynomials, generators and puncturing patterns.
    DescribeFec,
    /// Build a frame and write its channel bits as 0/1 text.
    Encode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print a labelled hex dump instead.
        #[arg(long)]
        dump: bool,
    },
    /// Recover the payload from a waveform file.
    Decode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Modulate a payload into a waveform file.
    Modulate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Slice the first frame of a waveform file back into channel bits.
    Demodulate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one frame through the channel and report the outcome.
    Simulate {
        /// Payload file; random bytes when absent.
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        length: usize,
    },
    /// Error rates over a list of SNR values, as CSV.
    Sweep {
        /// SNR points in dB, comma separated; "inf" for a noiseless point.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        snr: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        length: usize,
    },
    /// Send a file through the channel in frames and check its digest.
    Sendfile {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Payload octets per frame.
        #[arg(long, default_value_t = 1024)]
        chunk: usize,
    },
}

/// Failure categories mapped to exit codes.
enum Failure {
    Decode(String),
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

impl Global {
    fn phy_type(&self) -> PhyType {
        if self.phy == 1 {
            PhyType::PhyI
        } else {
            PhyType::PhyII
        }
    }

    fn operating_mode(&self) -> Result<OperatingMode, Failure> {
        Ok(lookup_mode(self.phy_type(), self.mode)?)
    }

    fn dimming_config(&self) -> DimmingConfig {
        match self.ook_dimming {
            OokMethod::Level => DimmingConfig::level(self.dimming),
            OokMethod::Compensation => DimmingConfig::compensation(self.dimming),
        }
    }

    fn channel_config(&self) -> Result<ChannelConfig, Failure> {
        let config = match &self.channel {
            Some(path) => serde_json::from_slice(&fs::read(path)?)?,
            None => ChannelConfig::default(),
        };
        let config = ChannelConfig {
            rng_seed: config.rng_seed ^ self.seed,
            ..config
        };
        config.validate()?;
        Ok(config)
    }

    fn loopback(&self) -> LoopbackConfig {
        LoopbackConfig {
            oversample: self.oversample,
            ..LoopbackConfig::default()
        }
    }
}

fn read_input(path: &Path) -> io::Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path)
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes),
        _ => io::stdout().write_all(bytes),
    }
}

fn bit_text(bits: impl Iterator<Item = u8>) -> String {
    let mut s: String = bits.map(|b| if b == 1 { '1' } else { '0' }).collect();
    s.push('\n');
    s
}

fn modes(csv: bool) -> CmdResult {
    let mut out = String::new();
    if csv {
        out.push_str("phy,index,modulation,rll,clock_hz,rs_n,rs_k,cc_rate,data_rate_bps\n");
    } else {
        let _ = writeln!(
            out,
            "{:<7} {:>3}  {:<5} {:<10} {:>11}  {:<11} {:<4} {:>12}",
            "PHY", "#", "MOD", "RLL", "CLOCK_HZ", "RS", "CC", "DATA RATE"
        );
    }
    for m in list_modes() {
        let rate = m.data_rate();
        let (n, k) = m.rs_params.map_or((String::new(), String::new()), |p| (p.n.to_string(), p.k.to_string()));
        let cc = m.cc_rate.map_or(String::new(), |c| c.to_string());
        if csv {
            let bps = *rate.numer() as f64 / *rate.denom() as f64;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{n},{k},{cc},{bps:.3}",
                m.phy_type, m.mode_index, m.modulation, m.rll_code, m.optical_clock_hz
            );
        } else {
            let rs = if n.is_empty() { "none".into() } else { format!("RS({n},{k})") };
            let cc = if cc.is_empty() { "none".into() } else { cc };
            let _ = writeln!(
                out,
                "{:<7} {:>3}  {:<5} {:<10} {:>11}  {:<11} {:<4} {:>12}",
                m.phy_type.to_string(),
                m.mode_index,
                m.modulation.to_string(),
                m.rll_code.to_string(),
                m.optical_clock_hz,
                rs,
                cc,
                vlcphy::mode::format_rate(rate)
            );
        }
    }
    print!("{out}");
    Ok(())
}

fn describe_fec() -> CmdResult {
    let mut out = String::new();
    for (name, gf) in [("GF(16)", GaloisField::gf16()), ("GF(256)", GaloisField::gf256())] {
        let _ = writeln!(out, "field {name} primitive_poly=0x{:x}", gf.primitive_poly());
    }
    let gens: Vec<String> = GENERATORS.iter().map(|g| format!("{g:o}")).collect();
    let _ = writeln!(out, "cc constraint_length={CONSTRAINT_LENGTH} generators_octal={}", gens.join(","));
    for rate in [CcRate::OneThird, CcRate::OneQuarter, CcRate::TwoThirds] {
        let steps: Vec<String> = CcCode::new(rate)
            .pattern()
            .iter()
            .map(|step| step.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(""))
            .collect();
        let _ = writeln!(out, "cc rate={rate} outputs_per_step={}", steps.join("|"));
    }
    for phy in [PhyType::PhyI, PhyType::PhyII] {
        let scheme = FecScheme::header(phy);
        let rs = scheme.rs.map_or("none".into(), |r| format!("RS({},{})", r.n(), r.k()));
        let cc = scheme.cc.map_or("none".into(), |c| c.rate().to_string());
        let _ = writeln!(out, "header {phy} rs={rs} cc={cc}");
    }
    out.push_str("interleaver rows=rs_blocks columns=n (write by codeword, read by column)\n");
    print!("{out}");
    Ok(())
}

fn encode(g: &Global, input: &Path, output: Option<&Path>, dump: bool) -> CmdResult {
    let payload = read_input(input)?;
    let mode = g.operating_mode()?;
    let frame = assemble_frame(&payload, &mode, &g.dimming_config(), &Mhr::default(), Topology::default())?;
    let text = if dump { frame.dump() } else { bit_text(frame.bits().iter()) };
    write_output(output, text.as_bytes())?;
    Ok(())
}

fn modulate(g: &Global, input: &Path, output: &Path) -> CmdResult {
    let payload = read_input(input)?;
    let mode = g.operating_mode()?;
    let dimming = g.dimming_config();
    let capture = transmit(&mode, &payload, &dimming, &Mhr::default(), &g.loopback(), 0)?;
    let wave = match &g.channel {
        Some(_) => Channel::new(g.channel_config()?)?.apply(&capture.wave),
        None => capture.wave,
    };
    wavefile::write(output, &wave, &mode, &dimming)?;
    Ok(())
}

fn receiver_for(meta: &wavefile::Sidecar) -> Result<Receiver, Failure> {
    let mode = meta.mode()?;
    Ok(Receiver::new(RxProfile::for_mode(&mode), RxConfig {
        subframe_length: meta.dimming.subframe_length,
        ..RxConfig::default()
    }))
}

fn report(result: &Result<RxFrame, RxFailure>) -> String {
    let mut out = String::new();
    match result {
        Ok(f) => {
            let _ = writeln!(out, "status=ok");
            let _ = writeln!(out, "mode={}:{}", f.mode.phy_type, f.mode.mode_index);
            let _ = writeln!(out, "start={}", f.start);
            let _ = writeln!(out, "end={}", f.end);
            let _ = writeln!(out, "topology={}", f.topology.index());
            let _ = writeln!(out, "score={:.4}", f.score);
            let _ = writeln!(out, "psdu_length={}", f.phr.psdu_length);
            let _ = writeln!(out, "dimming={}", f.phr.dimming_level);
            let _ = writeln!(out, "compensation={}", f.phr.compensation);
            let _ = writeln!(out, "sequence_number={}", f.mhr.sequence_number);
            let _ = writeln!(out, "fec_blocks={}", f.fec_report.blocks.len());
            let _ = writeln!(out, "corrected={}", f.fec_report.corrected_count());
            let _ = writeln!(out, "payload_bytes={}", f.payload.len());
        }
        Err(e) => {
            let _ = writeln!(out, "status=failed");
            let _ = writeln!(out, "stage={}", e.stage);
            let _ = writeln!(out, "error={}", e.error);
            if let Some(start) = e.start {
                let _ = writeln!(out, "start={start}");
            }
            if let Some(phr) = &e.phr {
                let _ = writeln!(out, "mode={}:{}", phr.phy_type, phr.mcs_id);
                let _ = writeln!(out, "psdu_length={}", phr.psdu_length);
            }
            if let Some(r) = &e.fec_report {
                let _ = writeln!(out, "fec_blocks={}", r.blocks.len());
                let _ = writeln!(out, "failed_blocks={}", r.failed_blocks());
            }
        }
    }
    out
}

fn decode(input: &Path, output: Option<&Path>) -> CmdResult {
    let (wave, meta) = wavefile::read(input)?;
    let result = receiver_for(&meta)?
        .next_frame(&wave)
        .unwrap_or_else(|| Err(RxFailure::no_frame()));
    let text = report(&result);
    match result {
        Ok(frame) => {
            // Without an output file the payload owns stdout.
            match output {
                Some(p) => {
                    fs::write(p, &frame.payload)?;
                    print!("{text}");
                }
                None => {
                    eprint!("{text}");
                    io::stdout().write_all(&frame.payload)?;
                }
            }
            Ok(())
        }
        Err(_) => {
            print!("{text}");
            Err(Failure::Decode("no frame delivered".into()))
        }
    }
}

fn demodulate(input: &Path, output: Option<&Path>) -> CmdResult {
    let (wave, meta) = wavefile::read(input)?;
    let n = wave.oversample;
    let mut rx = receiver_for(&meta)?;
    let modulation = rx.profile.modulation;
    let (start, end) = match rx.next_frame(&wave) {
        Some(Ok(f)) => (f.start, f.end),
        Some(Err(RxFailure { start: Some(start), end, .. })) => {
            let base = start.saturating_sub(n / 2);
            let start = base + recover_timing(&wave, modulation, base, SHR_LEN - 1).unwrap_or(n / 2);
            (start, end.unwrap_or(wave.len()))
        }
        _ => return Err(Failure::Decode("no frame found".into())),
    };
    let slots = (end.min(wave.len()) - start) / n;
    let part = Waveform {
        samples: wave.samples[start..start + slots * n].to_vec(),
        ..wave.clone()
    };
    let bits = match modulation {
        Modulation::Ook => {
            let levels = estimate_levels(&wave, start, &shr(Topology::default()))
                .unwrap_or_else(|_| OokLevels::for_dimming(&meta.dimming));
            ook_demodulate(&part, 0, &levels)?
        }
        Modulation::Vppm => vppm_demodulate(&part, 0)?,
    };
    write_output(output, bit_text(bits.iter()).as_bytes())?;
    Ok(())
}

fn simulate(g: &Global, input: Option<&Path>, length: usize) -> CmdResult {
    let payload = match input {
        Some(p) => read_input(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            (0..length).map(|_| rng.random()).collect()
        }
    };
    let mode = g.operating_mode()?;
    let r = run_loopback_with(&mode, &payload, &g.channel_config()?, &g.dimming_config(), g.seed, &g.loopback())?;
    print!("{}", report(&r.result));
    println!("chips={}", r.chips);
    println!("chip_errors={}", r.chip_errors);
    println!("payload_match={}", r.passed);
    if r.passed {
        Ok(())
    } else {
        Err(Failure::Decode("payload not delivered intact".into()))
    }
}

fn sweep(g: &Global, snr: Vec<f64>, frames: usize, length: usize) -> CmdResult {
    let spec = SweepSpec {
        dimming: g.dimming_config(),
        frames_per_point: frames,
        payload_length: length,
        oversample: g.oversample,
        seed: g.seed,
        ..SweepSpec::new(g.operating_mode()?, snr)
    };
    print!("{}", ber_sweep(&spec)?.to_csv());
    Ok(())
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn sendfile(g: &Global, input: &Path, output: Option<&Path>, chunk: usize) -> CmdResult {
    if chunk == 0 {
        return Err(Failure::Usage("chunk size must be positive".into()));
    }
    let data = read_input(input)?;
    let mode = g.operating_mode()?;
    let dimming = g.dimming_config();
    let config = g.loopback();
    let mut channel = Channel::new(g.channel_config()?)?;
    let rx_config = RxConfig {
        subframe_length: dimming.subframe_length,
        ..RxConfig::default()
    };
    let mut received = Vec::with_capacity(data.len());
    let (mut frames, mut lost, mut corrected) = (0usize, 0usize, 0usize);
    let chunks: Vec<&[u8]> = if data.is_empty() { vec![&[]] } else { data.chunks(chunk).collect() };
    for (i, piece) in chunks.into_iter().enumerate() {
        let mhr = Mhr {
            frame_control: 0,
            sequence_number: i as u8,
        };
        let capture = transmit(&mode, piece, &dimming, &mhr, &config, 0)?;
        let wave = channel.apply(&capture.wave);
        frames += 1;
        match Receiver::new(RxProfile::for_mode(&mode), rx_config).next_frame(&wave) {
            Some(Ok(f)) if f.mhr == mhr => {
                corrected += f.fec_report.corrected_count();
                received.extend_from_slice(&f.payload);
            }
            _ => lost += 1,
        }
    }
    let sent_digest = hex(&Sha256::digest(&data));
    let got_digest = hex(&Sha256::digest(&received));
    if let Some(p) = output {
        fs::write(p, &received)?;
    }
    println!("mode={}:{}", mode.phy_type, mode.mode_index);
    println!("frames={frames}");
    println!("frames_lost={lost}");
    println!("corrected={corrected}");
    println!("bytes_sent={}", data.len());
    println!("bytes_received={}", received.len());
    println!("sha256_sent={sent_digest}");
    println!("sha256_received={got_digest}");
    let ok = sent_digest == got_digest;
    println!("digest_match={ok}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Decode("digest mismatch".into()))
    }
}

fn run(cli: Cli) -> CmdResult {
    let g = &cli.global;
    if g.oversample == 0 {
        return Err(Failure::Usage("oversample must be positive".into()));
    }
    match cli.command {
        Command::Modes { csv } => modes(csv),
        Command::DescribeFec => describe_fec(),
        Command::Encode { input, output, dump } => encode(g, &input, output.as_deref(), dump),
        Command::Decode { input, output } => decode(&input, output.as_deref()),
        Command::Modulate { input, output } => modulate(g, &input, &output),
        Command::Demodulate { input, output } => demodulate(&input, output.as_deref()),
        Command::Simulate { input, length } => simulate(g, input.as_deref(), length),
        Command::Sweep { snr, frames, length } => sweep(g, snr, frames, length),
        Command::Sendfile { input, output, chunk } => sendfile(g, &input, output.as_deref(), chunk),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Decode(msg)) => {
            eprintln!("vlcphy: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("vlcphy: {msg}");
            ExitCode::from(2)
        }
    }
}
