/// Step-wise learning-rate multiplier: 1 before `⌈total/2⌉`, 0.1 before
/// `⌈3·total/4⌉`, 0.01 afterwards.
pub fn lr_factor(step: u64, total: u64) -> f64 {
    let (first, second) = breakpoints(total);
    if step < first {
        1.0
    } else if step < second {
        0.1
    } else {
        0.01
    }
}

/// The two steps at which the learning rate drops by 10×.
pub fn breakpoints(total: u64) -> (u64, u64) {
    (total.div_ceil(2), (3 * total).div_ceil(4))
}

/// True when `step` is the first step of a new learning-rate stage.
pub fn is_breakpoint(step: u64, total: u64) -> bool {
    let (first, second) = breakpoints(total);
    step > 0 && (step == first || step == second)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_at_half_and_three_quarters() {
        assert_eq!(lr_factor(0, 100), 1.0);
        assert_eq!(lr_factor(49, 100), 1.0);
        assert_eq!(lr_factor(50, 100), 0.1);
        assert_eq!(lr_factor(74, 100), 0.1);
        assert_eq!(lr_factor(75, 100), 0.01);
        assert_eq!(lr_factor(99, 100), 0.01);
    }

    #[test]
    fn odd_totals_round_breakpoints_up() {
        assert_eq!(breakpoints(7), (4, 6));
        assert_eq!(lr_factor(3, 7), 1.0);
        assert_eq!(lr_factor(4, 7), 0.1);
        assert_eq!(lr_factor(6, 7), 0.01);
        assert!(is_breakpoint(4, 7) && is_breakpoint(6, 7) && !is_breakpoint(5, 7));
        assert!(!is_breakpoint(0, 0));
    }
}
