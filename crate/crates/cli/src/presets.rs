//! Built-in parameter grids for the four comparison tables, with the
//! published values each row is checked against.

use arqsched::Slot;

/// Published `(reference, greedy, percent gap)` of a table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Published {
    pub reference: f64,
    pub greedy: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetRow {
    pub users: usize,
    pub horizon: Slot,
    pub p: f64,
    pub r: f64,
    /// Delay weights; normalized before use because some published rows
    /// are rounded.
    pub delay: Vec<f64>,
    pub published: Published,
}

fn row(users: usize, horizon: Slot, p: f64, r: f64, delay: &[f64], published: [f64; 3]) -> PresetRow {
    let [reference, greedy, percent] = published;
    PresetRow { users, horizon, p, r, delay: delay.to_vec(), published: Published { reference, greedy, percent } }
}

const THIRD: f64 = 1.0 / 3.0;
const SIXTH: f64 = 1.0 / 6.0;

const ONE_SLOT_TAILS: [[f64; 2]; 4] = [[0.0, 1.0], [THIRD, 2.0 * THIRD], [0.5, 0.5], [2.0 * THIRD, THIRD]];
const TWO_SLOT_TAILS: [[f64; 3]; 4] =
    [[0.0, 0.0, 1.0], [SIXTH, THIRD, 0.5], [THIRD, THIRD, THIRD], [0.5, THIRD, SIXTH]];

/// Expands one `(N, p, r)` block over its four delay laws.
fn block<const D: usize>(users: usize, p: f64, r: f64, tails: &[[f64; D]; 4], vals: [[f64; 3]; 4]) -> Vec<PresetRow> {
    tails.iter().zip(vals).map(|(d, v)| row(users, 10, p, r, d, v)).collect()
}

/// Rows of table `id` in `1..=4`.
pub fn table_rows(id: u8) -> Option<Vec<PresetRow>> {
    let rows = match id {
        1 => vec![
            row(3, 7, 0.9172, 0.2858, &[0.8822, 0.1178], [6.0707, 6.0696, 0.0182]),
            row(4, 7, 0.9464, 0.1666, &[0.5387, 0.4613], [5.9700, 5.9586, 0.1910]),
            row(3, 7, 0.6619, 0.2389, &[0.5908, 0.3959, 0.0132], [3.9933, 3.9914, 0.0476]),
            row(4, 7, 0.9281, 0.2824, &[0.6647, 0.1844, 0.1510], [5.8934, 5.8854, 0.1364]),
        ],
        2 => [
            block(
                10,
                0.5848,
                0.3509,
                &ONE_SLOT_TAILS,
                [
                    [5.3908, 5.2912, 1.8470],
                    [5.6547, 5.4281, 4.0072],
                    [5.7867, 5.4987, 4.9771],
                    [5.9187, 5.5712, 5.8703],
                ],
            ),
            block(
                10,
                0.6392,
                0.2328,
                &ONE_SLOT_TAILS,
                [
                    [5.5279, 5.2067, 5.8109],
                    [5.9195, 5.4119, 8.5741],
                    [6.1152, 5.5208, 9.7203],
                    [6.3110, 5.6353, 10.7070],
                ],
            ),
            block(
                20,
                0.9148,
                0.4309,
                &ONE_SLOT_TAILS,
                [
                    [8.8565, 8.8254, 0.3504],
                    [8.9715, 8.9291, 0.4723],
                    [9.0290, 8.9820, 0.5203],
                    [9.0865, 9.0357, 0.5593],
                ],
            ),
            block(
                20,
                0.3079,
                0.2517,
                &ONE_SLOT_TAILS,
                [
                    [3.4487, 3.4371, 0.3368],
                    [3.5525, 3.4661, 2.4315],
                    [3.6043, 3.4807, 3.4300],
                    [3.6562, 3.4955, 4.3967],
                ],
            ),
        ]
        .concat(),
        3 => [
            block(
                10,
                0.2148,
                0.1100,
                &TWO_SLOT_TAILS,
                [
                    [2.0196, 2.0162, 0.1716],
                    [2.1261, 2.0384, 4.1241],
                    [2.2152, 2.0577, 7.1089],
                    [2.3018, 2.0772, 9.7568],
                ],
            ),
            block(
                10,
                0.6863,
                0.4136,
                &TWO_SLOT_TAILS,
                [
                    [6.2768, 6.2571, 0.3131],
                    [6.4895, 6.3813, 1.6663],
                    [6.6375, 6.4743, 2.4587],
                    [6.7764, 6.5677, 3.0792],
                ],
            ),
            block(
                20,
                0.8822,
                0.2816,
                &TWO_SLOT_TAILS,
                [
                    [8.0485, 7.9811, 0.8376],
                    [8.3208, 8.1880, 1.5952],
                    [8.4754, 8.3186, 1.8493],
                    [8.6131, 8.4490, 1.9057],
                ],
            ),
            block(
                20,
                0.7120,
                0.5713,
                &TWO_SLOT_TAILS,
                [
                    [7.0084, 7.0066, 0.0251],
                    [7.0868, 7.0585, 0.3989],
                    [7.1495, 7.1017, 0.6675],
                    [7.2099, 7.1448, 0.9018],
                ],
            ),
        ]
        .concat(),
        // p + r = 1 keeps the steady state at 1/2 for both memories.
        4 => [
            block(
                20,
                0.6,
                0.4,
                &TWO_SLOT_TAILS,
                [
                    [5.6342, 5.6232, 0.1953],
                    [5.8068, 5.7105, 1.6592],
                    [5.9357, 5.7797, 2.6283],
                    [6.0584, 5.8494, 3.4499],
                ],
            ),
            block(
                20,
                0.9,
                0.1,
                &TWO_SLOT_TAILS,
                [
                    [7.9848, 7.7252, 3.2520],
                    [8.3585, 8.0181, 4.0726],
                    [8.5551, 8.1843, 4.3347],
                    [8.7265, 8.3522, 4.2890],
                ],
            ),
        ]
        .concat(),
        _ => return None,
    };
    Some(rows)
}
