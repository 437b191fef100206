use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use scaffold_cli::commands::{self, GraspEvalArgs, InsertArgs, MeshKind};
use scaffold_cli::service;
use scaffold_core::config::{
    seed_from_env, DEFAULT_CONE_EDGES, DEFAULT_DIRECTION_SAMPLES, DEFAULT_HAUSDORFF_SAMPLES, DEFAULT_PORT,
};
use scaffold_core::grasp::GripperModel;
use scaffold_core::io::{CloudFormat, MeshFormat};
use scaffold_core::scaffold::Primitive;
use scaffold_core::Vec3;

#[derive(Parser)]
#[command(name = "scaffold", version, about = "Scaffold annotation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn parse_primitive(s: &str) -> Result<Primitive, String> {
    match s {
        "cylinder" => Ok(Primitive::Cylinder),
        "box" => Ok(Primitive::Box),
        _ => Err(format!("unknown primitive {s:?}; use cylinder or box")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a new scaffold to a point cloud
    Insert {
        cloud: PathBuf,
        /// pcd, ply or xyz; taken from the extension by default
        #[arg(long)]
        format: Option<CloudFormat>,
        /// Sweep along this viewing direction (x,y,z) instead of the box axis
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        view: Option<Vec3>,
        /// Oriented-box axis to sweep along when no view is given
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long, default_value = "cylinder", value_parser = parse_primitive)]
        primitive: Primitive,
        #[arg(long, default_value_t = 4)]
        slices: usize,
        #[arg(long, default_value_t = 8)]
        handles: usize,
        #[arg(long)]
        tension: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pull slice contours onto the cloud
    Shrinkwrap {
        scaffold: PathBuf,
        cloud: PathBuf,
        #[arg(long)]
        format: Option<CloudFormat>,
        /// Slice indices to wrap; all slices when omitted
        #[arg(long, value_delimiter = ',')]
        slices: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Mesh a scaffold or assembly
    Mesh {
        scaffold: PathBuf,
        #[arg(long, default_value = "difference")]
        kind: MeshKind,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        /// obj, ply or stl; taken from the output extension by default
        #[arg(long)]
        format: Option<MeshFormat>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Volume, center of mass, inertia and bounds of a mesh or scaffold
    Measure {
        input: PathBuf,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
    /// Shape errors of a subject mesh against an ideal mesh
    Compare {
        ideal: PathBuf,
        subject: PathBuf,
        #[arg(long, default_value_t = DEFAULT_HAUSDORFF_SAMPLES)]
        samples: usize,
        /// Defaults to $SCAFFOLD_SEED or the built-in seed
        #[arg(long)]
        seed: Option<u64>,
        /// Modeling time in seconds, enabling the efficiency score
        #[arg(long)]
        duration: Option<f64>,
        /// Spline samples per segment when an input is a scaffold file
        #[arg(long, default_value_t = 16)]
        mesh_samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Average several annotations of one object into a prototype
    Merge {
        #[arg(required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 8)]
        slices: usize,
        #[arg(long, default_value_t = 16)]
        handles: usize,
        /// Also normalize size before averaging
        #[arg(long)]
        allow_scale: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Wrench-space quality of an annotated grasp
    GraspEval {
        project: PathBuf,
        grasp: String,
        #[arg(long, default_value_t = DEFAULT_CONE_EDGES)]
        cone_edges: usize,
        #[arg(long, default_value_t = DEFAULT_DIRECTION_SAMPLES)]
        directions: usize,
        #[arg(long, default_value_t = 16)]
        mesh_samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Ribbon area between two waypoint paths
    PathCompare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 100)]
        resample: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP session service
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Insert {
            cloud,
            format,
            view,
            axis,
            primitive,
            slices,
            handles,
            tension,
            output,
        } => {
            let (text, dropped) = commands::insert(&InsertArgs {
                cloud: &cloud,
                format,
                view,
                axis,
                primitive,
                slices,
                handles,
                tension,
            })?;
            if dropped > 0 {
                eprintln!("dropped {dropped} invalid points");
            }
            emit(&text, output.as_deref())
        }
        Command::Shrinkwrap {
            scaffold,
            cloud,
            format,
            slices,
            output,
        } => {
            let (text, warnings) = commands::shrinkwrap(&scaffold, &cloud, format, &slices)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            emit(&text, output.as_deref())
        }
        Command::Mesh {
            scaffold,
            kind,
            samples,
            format,
            output,
        } => {
            let format = match (format, &output) {
                (Some(f), _) => f,
                (None, Some(p)) => MeshFormat::from_path(p)?,
                (None, None) => MeshFormat::Obj,
            };
            emit(&commands::mesh(&scaffold, kind, samples, format)?, output.as_deref())
        }
        Command::Measure { input, samples } => emit(&commands::to_json(&commands::measure(&input, samples)?)?, None),
        Command::Compare {
            ideal,
            subject,
            samples,
            seed,
            duration,
            mesh_samples,
            output,
        } => {
            let seed = seed.unwrap_or_else(seed_from_env);
            let text = commands::compare(&ideal, &subject, samples, seed, duration, mesh_samples)?;
            emit(&text, output.as_deref())
        }
        Command::Merge {
            inputs,
            slices,
            handles,
            allow_scale,
            output,
        } => {
            let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
            emit(&commands::merge(&refs, slices, handles, allow_scale)?, output.as_deref())
        }
        Command::GraspEval {
            project,
            grasp,
            cone_edges,
            directions,
            mesh_samples,
            output,
        } => {
            let args = GraspEvalArgs {
                cone_edges,
                directions,
                mesh_samples,
                gripper: GripperModel::pr2(),
            };
            emit(&commands::grasp_eval(&project, &grasp, &args)?, output.as_deref())
        }
        Command::PathCompare { a, b, resample, output } => {
            emit(&commands::path_compare(&a, &b, resample)?, output.as_deref())
        }
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(&host, port))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e:#}", commands::error_kind(&e));
            ExitCode::FAILURE
        }
    }
}
