use risfd_core::agents::{
    run_episode, AgentConfig, DdpgAgent, EpisodeLog, EpisodeSeeds, RandomAgent, Td3Agent,
};
use risfd_core::env::{Env, EnvConfig};
use risfd_core::rng::{stream, Stream};

fn short() -> AgentConfig {
    AgentConfig { steps: 200, batch: 32, ..AgentConfig::default() }
}

fn check(log: &EpisodeLog, env: &EnvConfig, steps: usize) {
    assert_eq!(log.instant.len(), steps);
    assert_eq!(log.average.len(), steps);
    assert!(log.instant.iter().all(|r| r.is_finite() && *r >= 0.0));
    assert_eq!(log.best_reward, log.instant[log.best_step]);
    assert!(log.instant.iter().all(|r| *r <= log.best_reward));
    assert!(log.best_action.w.frob_norm_sqr() <= env.p_max);
}

fn ddpg(env_cfg: &EnvConfig, seed: u64) -> EpisodeLog {
    let cfg = short();
    let mut env = Env::new(env_cfg.clone()).unwrap();
    let mut agent =
        DdpgAgent::new(cfg.clone(), env.state_dim(), env.action_dim(), &mut stream(seed, Stream::NetworkInit)).unwrap();
    run_episode(&mut agent, &mut env, &cfg, EpisodeSeeds::uniform(seed)).unwrap()
}

#[test]
fn ddpg_episode_is_valid_and_reproducible() {
    let env = EnvConfig::default();
    let a = ddpg(&env, 3);
    check(&a, &env, 200);
    assert_eq!(a, ddpg(&env, 3));
    assert_ne!(a.instant, ddpg(&env, 4).instant);
}

#[test]
fn td3_and_random_episodes_are_valid() {
    let env_cfg = EnvConfig::default();
    let cfg = short();
    let mut env = Env::new(env_cfg.clone()).unwrap();
    let mut td3 =
        Td3Agent::new(cfg.clone(), env.state_dim(), env.action_dim(), &mut stream(1, Stream::NetworkInit)).unwrap();
    check(&run_episode(&mut td3, &mut env, &cfg, EpisodeSeeds::uniform(1)).unwrap(), &env_cfg, 200);
    assert!(td3.critic_updates() > 0);
    assert_eq!(td3.actor_updates(), td3.critic_updates() / 2);
    let mut random = RandomAgent::new(env.action_dim());
    check(&run_episode(&mut random, &mut env, &cfg, EpisodeSeeds::uniform(1)).unwrap(), &env_cfg, 200);
}

#[test]
fn half_duplex_episode_is_valid() {
    let env = EnvConfig::default().half_duplex();
    check(&ddpg(&env, 0), &env, 200);
}

#[test]
fn default_dimensions() {
    let env = Env::new(EnvConfig::default()).unwrap();
    assert_eq!((env.state_dim(), env.action_dim()), (92, 32));
}
