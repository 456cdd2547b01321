//! Published simulation grids and the values printed alongside them.

/// Four grid parameters and four printed means.
pub type GridRow = ((usize, usize, usize, f64), [f64; 4]);

/// `(p1, p2, r, t)` and the mean squared losses `(u_sp, v_sp, u_fro, v_fro)`.
pub const TABLE1: [GridRow; 8] = [
    ((100, 10, 2, 15.0), [0.3512, 0.0669, 0.6252, 0.0934]),
    ((100, 10, 2, 30.0), [0.1120, 0.0139, 0.1984, 0.0196]),
    ((100, 20, 5, 20.0), [0.2711, 0.0930, 0.9993, 0.2347]),
    ((100, 20, 5, 40.0), [0.0770, 0.0195, 0.2835, 0.0508]),
    ((1000, 20, 5, 30.0), [0.5838, 0.0699, 2.6693, 0.1786]),
    ((1000, 20, 10, 100.0), [0.1060, 0.0036, 0.9007, 0.0109]),
    ((1000, 200, 10, 50.0), [0.3456, 0.0797, 2.9430, 0.4863]),
    ((1000, 200, 50, 100.0), [0.1289, 0.0205, 4.3614, 0.2731]),
];

/// Sample sizes of the clustering grid.
pub const TABLE2_N: [usize; 6] = [5, 10, 20, 50, 100, 200];

/// `(p, t, ρ)` and the mean misclassification for each `n` in [`TABLE2_N`].
pub const TABLE2: [((usize, f64, f64), [f64; 6]); 8] = [
    ((100, 1.0, 0.5), [0.2100, 0.1485, 0.0690, 0.0494, 0.0440, 0.0333]),
    ((100, 1.0, 0.75), [0.2150, 0.1590, 0.0680, 0.0468, 0.0422, 0.0290]),
    ((100, 3.0, 0.5), [0.0019, 0.0005, 0.0000, 0.0000, 0.0000, 0.0000]),
    ((100, 3.0, 0.75), [0.0020, 0.0005, 0.0000, 0.0000, 0.0000, 0.0000]),
    ((1000, 1.0, 0.5), [0.3260, 0.3510, 0.3594, 0.2855, 0.2691, 0.1364]),
    ((1000, 1.0, 0.75), [0.3610, 0.3610, 0.3462, 0.3057, 0.2696, 0.1410]),
    ((1000, 3.0, 0.5), [0.1370, 0.0485, 0.0066, 0.0019, 0.0013, 0.0003]),
    ((1000, 3.0, 0.75), [0.1160, 0.0425, 0.0046, 0.0019, 0.0018, 0.0006]),
];

/// `(p1, p2, n, t)` and the mean losses `(u_sp, u_fro, v_sp, v_fro)`.
pub const TABLE3: [GridRow; 8] = [
    ((30, 10, 100, 0.8), [0.3194, 0.6609, 0.1571, 0.2530]),
    ((30, 10, 200, 0.5), [0.5348, 1.1111, 0.3343, 0.5256]),
    ((100, 10, 200, 0.8), [0.4103, 1.0145, 0.1120, 0.1825]),
    ((100, 10, 500, 0.5), [0.5183, 1.2821, 0.1614, 0.2606]),
    ((200, 20, 500, 0.8), [0.3239, 0.8428, 0.0746, 0.1442]),
    ((200, 20, 800, 0.5), [0.5834, 1.5155, 0.2423, 0.4605]),
    ((500, 50, 1000, 0.8), [0.3875, 1.0515, 0.1091, 0.2472]),
    ((500, 50, 2000, 0.5), [0.5677, 1.5467, 0.2216, 0.4910]),
];

/// Knobs for [`reproduce_table`](super::reproduce_table).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableOptions {
    pub threads: Option<usize>,
    /// Run the two `p2 = 200` rows of the denoising grid with `p2 = 100`.
    pub table1_p2_100: bool,
    /// Rank used for the CCA grid.
    pub cca_rank: usize,
    /// Average squared CCA losses.
    pub squared: bool,
    /// Draw the clustering mean direction once per setting.
    pub fix_mu: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { threads: None, table1_p2_100: false, cca_rank: 2, squared: false, fix_mu: false }
    }
}
