use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::CommandFactory;
use sociface_core::dialogue::{
    demo_decision, demo_engine, demo_store, run_scripted, ScriptedReplies, DEMO_NOW,
};
use sociface_core::harness::{
    default_enrollment, identity_id, run_named, Corpus, CorpusSpec, ExperimentConfig, SampleRef,
};
use sociface_core::recognizer::{DecisionPolicy, Source};
use sociface_core::socialstore::{PersonId, SocialStore, StoreDocument};
use sociface_service::api::{LastEncounter, MemoryView, MutualView, PersonView};
use sociface_service::{corpus_world, AppState, ServiceConfig};

use crate::{Cli, ExpArgs, Experiment, Query, ServeArgs, SpecArgs};

/// Reports a usage problem the parser cannot see and exits with code 2.
fn usage(msg: &str) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::ArgumentConflict, msg)
        .exit()
}

fn load_spec(args: &SpecArgs) -> Result<CorpusSpec> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            CorpusSpec::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => CorpusSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn corpus_spec() -> Result<()> {
    println!("{}", CorpusSpec::default().to_json());
    Ok(())
}

/// PNGs per identity: frame 0 of every camera session, the hardened frame 0
/// of the test session, and the first five Facebook photos.
pub fn corpus_gen(args: &SpecArgs, out: &Path) -> Result<()> {
    let spec = load_spec(args)?;
    let corpus = Corpus::generate(&spec)?;
    let faces = out.join("faces");
    std::fs::create_dir_all(&faces)?;
    std::fs::write(out.join("spec.json"), spec.to_json())?;
    let mut manifest = csv::Writer::from_path(out.join("manifest.csv"))?;
    manifest.write_record([
        "file",
        "person_id",
        "identity",
        "source",
        "session",
        "frame",
        "hard",
        "x",
        "y",
        "w",
        "h",
        "pose",
    ])?;
    let mut written = 0;
    for i in 0..corpus.total_identities() {
        let mut refs: Vec<SampleRef> = (0..spec.sessions_per_identity)
            .map(|s| SampleRef::camera(i, s, 0))
            .collect();
        refs.push(SampleRef::camera(i, spec.sessions_per_identity - 1, 0).hardened());
        refs.extend((0..spec.facebook_photos.min(5)).map(|k| SampleRef::facebook(i, k)));
        let pid = identity_id(i);
        for r in refs {
            let (img, rect) = corpus.render(&r)?;
            let name = match (r.source, r.hard) {
                (Source::Facebook, _) => format!("{pid}_fb{:03}.png", r.session),
                (_, true) => format!("{pid}_s{}_f{:03}_hard.png", r.session, r.frame),
                _ => format!("{pid}_s{}_f{:03}.png", r.session, r.frame),
            };
            img.save_png(&faces.join(&name))?;
            let source = match r.source {
                Source::Camera => "camera",
                Source::Facebook => "facebook",
            };
            manifest.write_record([
                format!("faces/{name}"),
                pid.to_string(),
                i.to_string(),
                source.to_string(),
                r.session.to_string(),
                r.frame.to_string(),
                r.hard.to_string(),
                rect.x.to_string(),
                rect.y.to_string(),
                rect.w.to_string(),
                rect.h.to_string(),
                format!("{:?}", rect.pose).to_lowercase(),
            ])?;
            written += 1;
        }
    }
    manifest.flush()?;
    println!(
        "wrote {written} sample images and manifest.csv to {}",
        out.display()
    );
    Ok(())
}

pub fn exp(args: &ExpArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    match (args.experiment, args.theta, args.window) {
        (Experiment::Threshold, Some(_), _) => {
            usage("--theta does not apply to the threshold sweep")
        }
        (Experiment::Window, _, Some(_)) => usage("--window does not apply to the window sweep"),
        (Experiment::Cost | Experiment::Transfer, Some(_), _)
        | (Experiment::Cost | Experiment::Transfer, _, Some(_)) => {
            usage("--theta and --window only apply to the threshold and window sweeps")
        }
        _ => {}
    }
    if let Some(theta) = args.theta {
        cfg.window.theta = theta;
    }
    if let Some(w) = args.window {
        cfg.threshold.window = w;
    }
    let corpus = Corpus::generate(&load_spec(&args.spec)?)?;
    let report = run_named(args.experiment.name(), &corpus, &cfg)?;
    let csv = report.write_to(&args.out)?;
    println!("{}", csv.display());
    for (k, v) in &report.summary {
        eprintln!("{k} = {v}");
    }
    Ok(())
}

fn open_store(path: &Path) -> Result<SocialStore> {
    SocialStore::load(path).with_context(|| format!("loading store {}", path.display()))
}

pub fn store_ingest(store_path: &Path, export: &Path) -> Result<()> {
    let mut store = if store_path.exists() {
        open_store(store_path)?
    } else {
        SocialStore::new()
    };
    let text =
        std::fs::read_to_string(export).with_context(|| format!("reading {}", export.display()))?;
    let doc: StoreDocument =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", export.display()))?;
    let summary = store.ingest(doc)?;
    store.save(store_path)?;
    print_json(&summary)
}

pub fn store_query(store_path: &Path, query: &Query) -> Result<()> {
    let store = open_store(store_path)?;
    match query {
        Query::Person { id } => {
            let id = PersonId::new(id.as_str());
            print_json(&PersonView {
                person: store.person(&id)?,
                friends: store.friends(&id)?,
            })
        }
        Query::Mutual { a, b } => {
            let (a, b) = (PersonId::new(a.as_str()), PersonId::new(b.as_str()));
            let mutual = store.mutual_friends(&a, &b)?;
            print_json(&MutualView { a, b, mutual })
        }
        Query::Memory { id } => {
            let id = PersonId::new(id.as_str());
            print_json(&MemoryView {
                records: store.interactions_for(&id)?,
                last_encounter: store.last_encounter(&id)?.map(|(session_id, timestamp)| {
                    LastEncounter {
                        session_id,
                        timestamp,
                    }
                }),
                person_id: id,
            })
        }
    }
}

pub fn dialogue_demo(json: bool, out: Option<&Path>) -> Result<()> {
    let mut store = demo_store();
    let (transcript, _) = run_scripted(
        &demo_engine(),
        &mut store,
        &demo_decision(),
        &ScriptedReplies::default(),
        DEMO_NOW,
    )?;
    if json {
        print_json(&transcript)?;
    } else {
        print!("{transcript}");
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("transcript.txt"), transcript.to_string())?;
        store.save(&dir.join("store.json"))?;
    }
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let corpus = Arc::new(Corpus::generate(&spec)?);
    let registry = Arc::new(default_enrollment(&corpus)?);
    let mut config = ServiceConfig::new(&args.out);
    let base = DecisionPolicy::default();
    config.policy = DecisionPolicy::new(
        args.theta.unwrap_or(base.theta),
        base.min_win,
        args.window.unwrap_or(base.window),
    )
    .unwrap_or_else(|e| usage(&e.to_string()));
    let store = match &args.store {
        Some(p) if p.exists() => open_store(p)?,
        Some(p) => {
            let s = corpus_world(&corpus, config.clock.now());
            s.save(p)?;
            s
        }
        None => corpus_world(&corpus, config.clock.now()),
    };
    config.store_path = args.store.clone();
    let state = AppState::new(config, corpus, registry, store);
    let addr = format!("{}:{}", args.bind, args.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        sociface_service::serve(listener, state).await?;
        Ok(())
    })
}
