mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clcp_core::zeval::Variant;

#[derive(Debug, Parser)]
#[command(name = "clcp", version, about = "Heterogeneous-image code encoding and contrastive code/text pretraining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// JSON key holding the source code.
    #[arg(long, default_value = "code")]
    pub code_field: String,
    /// JSON key holding the description.
    #[arg(long, default_value = "docstring")]
    pub doc_field: String,
    /// JSON key holding a record id (line number when absent).
    #[arg(long)]
    pub id_field: Option<String>,
    /// Read at most this many records.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset family used when no config file is given: lp, gp or rn.
    #[arg(long)]
    pub family: Option<String>,
    /// Number of conv blocks.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Override one config field, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a vocabulary file from the code of a JSONL corpus.
    BuildVocab {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Encode every snippet of a corpus into a binary image file.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = clcp_core::himg::DEFAULT_IMG_LEN)]
        img_len: usize,
        /// Also write a text dump to `<out>.txt`.
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Strip redundant description content and write the cleaned corpus.
    CleanText {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Train a model; writes a new run directory under `--out-dir`.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, visible_alias = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value = "raw")]
        variant: Variant,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Zero-shot matching of a trained run on a test corpus.
    Eval {
        /// Run directory written by `train`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "raw")]
        variant: Variant,
        /// Results CSV; a manifest is written beside it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Train and evaluate every config over a size ladder.
    Ladder {
        /// JSON sample plan: `{"train_sizes": [..], "test_sizes": [..], "seed": n}`.
        #[arg(long)]
        plan: PathBuf,
        /// Corpus; the synthetic family is used when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, visible_alias = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value = "raw")]
        variant: Variant,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        /// Config files; repeatable.
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Preset families to add, comma separated.
        #[arg(long, value_delimiter = ',')]
        family: Vec<String>,
        #[arg(long, default_value_t = 3)]
        blocks: usize,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Run the family x delta ablation matrix over a size ladder.
    Ablate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, visible_alias = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value = "raw")]
        variant: Variant,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        /// Shared settings for every base config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "lp,gp,rn")]
        family: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "3")]
        blocks: Vec<usize>,
        /// Deltas: none, +BN, -Pool, -Init.
        #[arg(long, value_delimiter = ',', default_value = "none,+BN,-Pool,-Init", allow_hyphen_values = true)]
        deltas: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[command(flatten)]
        fields: FieldArgs,
    },
    /// Print details of a vocabulary id, an encoded image or a config.
    Inspect {
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        id: Option<u32>,
        #[arg(long)]
        img: Option<PathBuf>,
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write synthetic (code, description) pairs as JSONL.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "train")]
        split: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pairs with pairwise-distinct token layouts instead of a split sample.
        #[arg(long)]
        distinct: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildVocab { input, out, fields } => commands::build_vocab(&input, &out, &fields),
        Command::Encode {
            input,
            vocab,
            out,
            img_len,
            dump,
            fields,
        } => commands::encode(&input, &vocab, &out, img_len, dump, &fields),
        Command::CleanText { input, out, fields } => commands::clean_text(&input, &out, &fields),
        Command::Train {
            data,
            out_dir,
            variant,
            seed,
            config,
            fields,
        } => commands::train(&data, &out_dir, variant, seed, &config, &fields),
        Command::Eval {
            run,
            test,
            variant,
            out,
            fields,
        } => commands::eval(&run, &test, variant, &out, &fields),
        Command::Ladder {
            plan,
            data,
            out_dir,
            variant,
            seeds,
            configs,
            family,
            blocks,
            overrides,
            fields,
        } => commands::ladder(commands::LadderArgs {
            plan: &plan,
            data: data.as_deref(),
            out_dir: &out_dir,
            variant,
            seeds: &seeds,
            configs: &configs,
            families: &family,
            blocks,
            overrides: &overrides,
            fields: &fields,
        }),
        Command::Ablate {
            plan,
            data,
            out_dir,
            variant,
            seeds,
            config,
            family,
            blocks,
            deltas,
            overrides,
            fields,
        } => commands::ablate(commands::AblateArgs {
            plan: &plan,
            data: data.as_deref(),
            out_dir: &out_dir,
            variant,
            seeds: &seeds,
            config: config.as_deref(),
            families: &family,
            blocks: &blocks,
            deltas: &deltas,
            overrides: &overrides,
            fields: &fields,
        }),
        Command::Inspect {
            vocab,
            id,
            img,
            index,
            config,
        } => commands::inspect(vocab.as_deref(), id, img.as_deref(), index, config.as_deref()),
        Command::Synth {
            out,
            n,
            split,
            seed,
            distinct,
        } => commands::synth(&out, n, &split, seed, distinct),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
