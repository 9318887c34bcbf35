//! Episode communication graphs of a CDC actor as JSON, with the episode-
//! averaged heat matrix and each agent's eigenvector centrality.

use cdc::envs::{EnvConfig, Task};
use cdc::harness::export_graphs;
use cdc::policy::CdcActor;
use cdc::spectral::HeatConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cdc::Result<()> {
    let env = EnvConfig::new(Task::Navigation, 3);
    let actor = CdcActor::new(env.observation_width(), HeatConfig::default(), &mut ChaCha8Rng::seed_from_u64(5));
    let export = export_graphs(&actor, &env, 5)?;
    println!("{} steps, {} pairs per step", export.steps.len(), export.steps[0].edges.len());
    for row in &export.averaged {
        println!("{}", row.iter().map(|h| format!("{h:.4}")).collect::<Vec<_>>().join("  "));
    }
    println!("centrality {:.4?}", export.centrality);
    let path = std::env::temp_dir().join("cdc_graphs.json");
    export.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
