//! Counter-based random numbers: every draw is a pure function of
//! (master seed, path index, stream, counter), so paths regenerate
//! bit-identically and parallel workers never share state.
//!
//! Gaussians come from the inverse normal CDF (Wichura's AS241, double
//! precision) applied to a 106-bit uniform built from two hashed words.

/// Stream ids. Brownian components use `STREAM_BROWNIAN_BASE + j`; the
/// auxiliary Brownian motions of the limit SDEs and the Rademacher coins get
/// disjoint ranges.
pub const STREAM_BROWNIAN_BASE: u64 = 0;
pub const STREAM_AUX_BASE: u64 = 0x1000;
pub const STREAM_PAIR_BASE: u64 = 0x2000;
pub const STREAM_RADEMACHER: u64 = 0x4000;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One 64-bit word of the counter-based stream.
#[inline]
pub fn word(seed: u64, path_index: u64, stream: u64, counter: u64) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ path_index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    h = mix64(h ^ stream.wrapping_mul(0xaef1_7502_108e_f2d9));
    mix64(h ^ counter.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// Uniform in the open interval (0, 1) from two words of the stream.
#[inline]
pub fn uniform(seed: u64, path_index: u64, stream: u64, counter: u64) -> f64 {
    let hi = word(seed, path_index, stream, counter.wrapping_mul(2));
    let lo = word(seed, path_index, stream, counter.wrapping_mul(2).wrapping_add(1));
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (((hi >> 11) as f64) + (((lo >> 11) as f64) + 0.5) * SCALE) * SCALE
}

/// Standard normal draw at the given counter.
#[inline]
pub fn standard_normal(seed: u64, path_index: u64, stream: u64, counter: u64) -> f64 {
    inv_normal_cdf(uniform(seed, path_index, stream, counter))
}

/// Rademacher ±1 draw at the given counter.
#[inline]
pub fn rademacher(seed: u64, path_index: u64, counter: u64) -> i8 {
    if word(seed, path_index, STREAM_RADEMACHER, counter) & 1 == 0 {
        -1
    } else {
        1
    }
}

/// Inverse of the standard normal CDF (AS241, PPND16).
pub fn inv_normal_cdf(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    let q = u - 0.5;
    if libm::fabs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A_CENTRAL, r) / poly(&B_CENTRAL, r);
    }
    let r = if q < 0.0 { u } else { 1.0 - u };
    let r = libm::sqrt(-libm::log(r));
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C_TAIL, r) / poly(&D_TAIL, r)
    } else {
        let r = r - 5.0;
        poly(&E_FAR, r) / poly(&F_FAR, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[inline]
fn poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

const A_CENTRAL: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B_CENTRAL: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C_TAIL: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D_TAIL: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E_FAR: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F_FAR: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];
