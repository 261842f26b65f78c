//! Secondary-channel check at primary grant: widest width whose secondaries
//! were idle for at least PIFS.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantPolicy {
    FallBack,
    Restart,
}

/// `secondary_idle_us[i]` is how long 20 MHz channel `i + 1` has been idle.
/// Channel order: primary, secondary, then the two tertiary channels.
/// `None` means the backoff restarts (only under `GrantPolicy::Restart`).
pub fn multichannel_grant(
    max_bandwidth_mhz: u16,
    secondary_idle_us: &[u64],
    pifs_us: u32,
    policy: GrantPolicy,
) -> Option<u16> {
    let idle = |upto: usize| secondary_idle_us.iter().take(upto).all(|&d| d >= pifs_us as u64);
    let width = if max_bandwidth_mhz >= 80 && secondary_idle_us.len() >= 3 && idle(3) {
        80
    } else if max_bandwidth_mhz >= 40 && !secondary_idle_us.is_empty() && idle(1) {
        40
    } else {
        20
    };
    match policy {
        GrantPolicy::Restart if width < max_bandwidth_mhz => None,
        _ => Some(width),
    }
}
