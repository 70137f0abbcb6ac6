//! Registry of elementary task bodies.
//!
//! A repetitive task names one of these builtins as its body; at each
//! repetition index the body maps input patterns to output patterns. Every
//! builtin carries three faces that must agree bit-exactly: a shape/type
//! check used by validation, a pure evaluation function used by the
//! simulator, and a C-dialect source template used by the backend for both
//! device kernels and host-side task loops.

use crate::ir::{ScalarType, Shape};
use crate::tiler::{Pattern, ScalarVec};

/// Pattern shape and element type of one port instantiation.
pub type PortSig<'a> = (&'a Shape, ScalarType);

/// An elementary body registered with the toolchain.
pub struct Builtin {
    pub name: &'static str,
    /// Number of input patterns consumed.
    pub inputs: usize,
    /// Number of output patterns produced.
    pub outputs: usize,
    /// Validate an instantiation's pattern shapes and element types.
    pub check: fn(ins: &[PortSig], outs: &[PortSig]) -> Result<(), String>,
    /// Apply the body. Outputs are preallocated with the declared shapes.
    pub eval: fn(ins: &[Pattern], outs: &mut [Pattern]),
    /// Emit a C function definition with the given name for an
    /// instantiation. The same source is valid OpenCL C and host C.
    pub c_source: fn(name: &str, ins: &[PortSig], outs: &[PortSig]) -> String,
}

/// All registered builtins.
pub fn registry() -> &'static [Builtin] {
    &REGISTRY
}

/// Find a builtin by name.
pub fn lookup(name: &str) -> Option<&'static Builtin> {
    REGISTRY.iter().find(|b| b.name == name)
}

/// C function name for an instantiation of a builtin. Shape-generic bodies
/// get the element type and count baked into the name so distinct
/// instantiations coexist in one generated file.
pub fn c_function_name(builtin: &Builtin, ins: &[PortSig], outs: &[PortSig]) -> String {
    match builtin.name {
        "hfilter_8to3" | "vfilter_9to4" => format!("body_{}", builtin.name),
        _ => {
            let (shape, ty) = outs.first().copied().unwrap_or(ins[0]);
            format!("body_{}_{}_{}", builtin.name, ty.keyword(), shape.len())
        }
    }
}

static REGISTRY: [Builtin; 4] = [
    Builtin {
        name: "hfilter_8to3",
        inputs: 1,
        outputs: 1,
        check: check_hfilter,
        eval: eval_hfilter,
        c_source: c_hfilter,
    },
    Builtin {
        name: "vfilter_9to4",
        inputs: 1,
        outputs: 1,
        check: check_vfilter,
        eval: eval_vfilter,
        c_source: c_vfilter,
    },
    Builtin {
        name: "passthrough",
        inputs: 1,
        outputs: 1,
        check: check_passthrough,
        eval: eval_passthrough,
        c_source: c_passthrough,
    },
    Builtin {
        name: "add",
        inputs: 2,
        outputs: 1,
        check: check_add,
        eval: eval_add,
        c_source: c_add,
    },
];

// ---------------------------------------------------------------------------
// Downscaling filters
// ---------------------------------------------------------------------------

/// Horizontal polyphase reduction of an 8-pixel packet to 3 pixels.
///
/// Fixed-point linear interpolation at source positions
/// `s_k = (k + 0.5) * 8/3 - 0.5`, rounded half-up. The weights of each tap
/// sum to the denominator, so constant inputs are preserved exactly and the
/// result never leaves the input range.
pub fn hfilter_8to3(input: &[u8; 8]) -> [u8; 3] {
    let px = |i: usize| i32::from(input[i]);
    [
        clamp_u8((px(0) + 5 * px(1) + 3) / 6),
        clamp_u8((3 * px(3) + 3 * px(4) + 3) / 6),
        clamp_u8((5 * px(6) + px(7) + 3) / 6),
    ]
}

/// Vertical polyphase reduction of a 9-pixel packet to 4 pixels.
///
/// Fixed-point linear interpolation at `s_k = (k + 0.5) * 9/4 - 0.5`,
/// rounded half-up; same exactness properties as [`hfilter_8to3`].
pub fn vfilter_9to4(input: &[u8; 9]) -> [u8; 4] {
    let px = |i: usize| i32::from(input[i]);
    [
        clamp_u8((3 * px(0) + 5 * px(1) + 4) / 8),
        clamp_u8((px(2) + 7 * px(3) + 4) / 8),
        clamp_u8((7 * px(5) + px(6) + 4) / 8),
        clamp_u8((5 * px(7) + 3 * px(8) + 4) / 8),
    ]
}

fn clamp_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

fn check_hfilter(ins: &[PortSig], outs: &[PortSig]) -> Result<(), String> {
    check_fixed_u8(ins, outs, 8, 3)
}

fn check_vfilter(ins: &[PortSig], outs: &[PortSig]) -> Result<(), String> {
    check_fixed_u8(ins, outs, 9, 4)
}

fn check_fixed_u8(
    ins: &[PortSig],
    outs: &[PortSig],
    want_in: usize,
    want_out: usize,
) -> Result<(), String> {
    let (in_shape, in_ty) = ins[0];
    let (out_shape, out_ty) = outs[0];
    if in_shape.extents() != [want_in] {
        return Err(format!("expects input pattern [{want_in}], got {in_shape}"));
    }
    if out_shape.extents() != [want_out] {
        return Err(format!(
            "expects output pattern [{want_out}], got {out_shape}"
        ));
    }
    if in_ty != ScalarType::U8 || out_ty != ScalarType::U8 {
        return Err("operates on u8 patterns only".to_string());
    }
    Ok(())
}

fn eval_hfilter(ins: &[Pattern], outs: &mut [Pattern]) {
    let (ScalarVec::U8(src), ScalarVec::U8(dst)) = (&ins[0].data, &mut outs[0].data) else {
        unreachable!("validated u8 patterns");
    };
    let packet: &[u8; 8] = src.as_slice().try_into().expect("validated pattern [8]");
    dst.copy_from_slice(&hfilter_8to3(packet));
}

fn eval_vfilter(ins: &[Pattern], outs: &mut [Pattern]) {
    let (ScalarVec::U8(src), ScalarVec::U8(dst)) = (&ins[0].data, &mut outs[0].data) else {
        unreachable!("validated u8 patterns");
    };
    let packet: &[u8; 9] = src.as_slice().try_into().expect("validated pattern [9]");
    dst.copy_from_slice(&vfilter_9to4(packet));
}

fn c_hfilter(name: &str, _ins: &[PortSig], _outs: &[PortSig]) -> String {
    format!(
        "void {name}(const uchar *in0, uchar *out0)\n\
         {{\n\
         \tout0[0] = (uchar)((1 * (int)in0[0] + 5 * (int)in0[1] + 3) / 6);\n\
         \tout0[1] = (uchar)((3 * (int)in0[3] + 3 * (int)in0[4] + 3) / 6);\n\
         \tout0[2] = (uchar)((5 * (int)in0[6] + 1 * (int)in0[7] + 3) / 6);\n\
         }}\n"
    )
}

fn c_vfilter(name: &str, _ins: &[PortSig], _outs: &[PortSig]) -> String {
    format!(
        "void {name}(const uchar *in0, uchar *out0)\n\
         {{\n\
         \tout0[0] = (uchar)((3 * (int)in0[0] + 5 * (int)in0[1] + 4) / 8);\n\
         \tout0[1] = (uchar)((1 * (int)in0[2] + 7 * (int)in0[3] + 4) / 8);\n\
         \tout0[2] = (uchar)((7 * (int)in0[5] + 1 * (int)in0[6] + 4) / 8);\n\
         \tout0[3] = (uchar)((5 * (int)in0[7] + 3 * (int)in0[8] + 4) / 8);\n\
         }}\n"
    )
}

// ---------------------------------------------------------------------------
// Shape-generic bodies
// ---------------------------------------------------------------------------

fn check_passthrough(ins: &[PortSig], outs: &[PortSig]) -> Result<(), String> {
    let (in_shape, in_ty) = ins[0];
    let (out_shape, out_ty) = outs[0];
    if in_shape != out_shape {
        return Err(format!(
            "input and output patterns must match, got {in_shape} and {out_shape}"
        ));
    }
    if in_ty != out_ty {
        return Err(format!(
            "input and output element types must match, got {in_ty} and {out_ty}"
        ));
    }
    Ok(())
}

fn eval_passthrough(ins: &[Pattern], outs: &mut [Pattern]) {
    outs[0].data = ins[0].data.clone();
}

fn c_passthrough(name: &str, ins: &[PortSig], _outs: &[PortSig]) -> String {
    let (shape, ty) = ins[0];
    let cty = c_type(ty);
    let n = shape.len();
    format!(
        "void {name}(const {cty} *in0, {cty} *out0)\n\
         {{\n\
         \tfor (int i = 0; i < {n}; ++i) {{\n\
         \t\tout0[i] = in0[i];\n\
         \t}}\n\
         }}\n"
    )
}

fn check_add(ins: &[PortSig], outs: &[PortSig]) -> Result<(), String> {
    let (a_shape, a_ty) = ins[0];
    for &(shape, ty) in ins.iter().chain(outs.iter()).skip(1) {
        if shape != a_shape || ty != a_ty {
            return Err(format!(
                "all patterns must be {a_shape} of {a_ty}, got {shape} of {ty}"
            ));
        }
    }
    Ok(())
}

/// Elementwise addition; integer types wrap, matching the emitted C.
fn eval_add(ins: &[Pattern], outs: &mut [Pattern]) {
    match (&ins[0].data, &ins[1].data, &mut outs[0].data) {
        (ScalarVec::U8(a), ScalarVec::U8(b), ScalarVec::U8(o)) => {
            for i in 0..o.len() {
                o[i] = a[i].wrapping_add(b[i]);
            }
        }
        (ScalarVec::I32(a), ScalarVec::I32(b), ScalarVec::I32(o)) => {
            for i in 0..o.len() {
                o[i] = a[i].wrapping_add(b[i]);
            }
        }
        (ScalarVec::F32(a), ScalarVec::F32(b), ScalarVec::F32(o)) => {
            for i in 0..o.len() {
                o[i] = a[i] + b[i];
            }
        }
        _ => unreachable!("validated matching element types"),
    }
}

fn c_add(name: &str, ins: &[PortSig], _outs: &[PortSig]) -> String {
    let (shape, ty) = ins[0];
    let cty = c_type(ty);
    let n = shape.len();
    let expr = match ty {
        // Unsigned arithmetic keeps integer wrap-around defined in C.
        ScalarType::U8 => "(uchar)(in0[i] + in1[i])",
        ScalarType::I32 => "(int)((unsigned int)in0[i] + (unsigned int)in1[i])",
        ScalarType::F32 => "in0[i] + in1[i]",
    };
    format!(
        "void {name}(const {cty} *in0, const {cty} *in1, {cty} *out0)\n\
         {{\n\
         \tfor (int i = 0; i < {n}; ++i) {{\n\
         \t\tout0[i] = {expr};\n\
         \t}}\n\
         }}\n"
    )
}

/// C spelling of an element type (valid in OpenCL C; the emitted host file
/// typedefs `uchar`).
pub fn c_type(ty: ScalarType) -> &'static str {
    match ty {
        ScalarType::U8 => "uchar",
        ScalarType::I32 => "int",
        ScalarType::F32 => "float",
    }
}
