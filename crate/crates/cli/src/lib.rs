//! The `gpfo` command line and the HTTP service behind the garden workbench.

pub mod cli;
pub mod server;
pub mod view;

use gpfo_core::garden::{GardenConfig, GardenStore};
use gpfo_core::gateway::GatewayConfig;

/// Garden settings whose agent profiles come from the gateway config.
pub fn garden_config(gw: &GatewayConfig, iterations: usize) -> GardenConfig {
    let mut cfg = GardenConfig::default();
    cfg.session.iterations = iterations;
    cfg.session.reasoner = gw.reasoner.clone();
    cfg.session.critic = gw.critic.clone();
    cfg
}

/// A readable id derived from the seed prompt, suffixed until unused.
pub fn fresh_id(store: &GardenStore, seed: &str) -> String {
    let mut slug = String::new();
    for word in seed.split(|c: char| !c.is_ascii_alphanumeric()).filter(|w| !w.is_empty()) {
        if slug.len() + word.len() > 40 {
            break;
        }
        if !slug.is_empty() {
            slug.push('-');
        }
        slug.push_str(&word.to_ascii_lowercase());
    }
    if slug.is_empty() {
        slug.push_str("garden");
    }
    let mut id = slug.clone();
    let mut n = 2;
    while store.dir(&id).exists() {
        id = format!("{slug}-{n}");
        n += 1;
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_slugs_and_avoid_collisions() {
        let dir = tempfile::tempdir().unwrap();
        let store = GardenStore::new(dir.path());
        assert_eq!(fresh_id(&store, "How can Music inform materials?"), "how-can-music-inform-materials");
        assert_eq!(fresh_id(&store, "???"), "garden");
        std::fs::create_dir_all(dir.path().join("garden")).unwrap();
        assert_eq!(fresh_id(&store, "!"), "garden-2");
    }
}
