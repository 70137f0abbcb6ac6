//! Host driver emission.
//!
//! The driver is a single portable C file against the OpenCL host API:
//! platform/device selection, kernel compilation from the sibling `.cl`
//! file, one device buffer per plan entry (read-only flags honored), and a
//! per-frame loop that reads raw input frames, replays the schedule steps in
//! order, and writes raw output frames. Per-direction transfer byte counters
//! are printed on exit. Host-allocated tasks run as plain C loops over the
//! host staging arrays.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::kernel::{emit_body_helpers, emit_elementary_step, Names};
use super::BackendError;
use crate::builtins;
use crate::ir::{Model, TaskId};
use crate::passes::{BufferPlan, LaunchTopology, Step, TransferSchedule};

/// Emit the complete host driver for a schedule.
pub fn emit_host(
    model: &Model,
    schedule: &TransferSchedule,
    plan: &BufferPlan,
    topologies: &BTreeMap<TaskId, LaunchTopology>,
) -> Result<String, BackendError> {
    if !model.task_ids().any(|t| model.task_on_device(t)) {
        return Err(BackendError::NothingToGenerate);
    }
    for step in &schedule.steps {
        if let Some(a) = step.transferred_array() {
            if plan.entry(a).is_none() {
                return Err(BackendError::UnplannedArray(model.array(a).name.clone()));
            }
        }
    }

    let names = Names::new(model)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "/* OpenCL host driver for model '{}'. Generated; do not edit. */",
        model.name
    );
    out.push_str(HEADER);

    // Body helpers and task loops for host-allocated tasks.
    let host_tasks: Vec<TaskId> = model
        .task_ids()
        .filter(|&t| !model.task_on_device(t))
        .collect();
    if !host_tasks.is_empty() {
        emit_body_helpers(&mut out, model, host_tasks.iter().copied())?;
        for &t in &host_tasks {
            emit_host_task_fn(&mut out, model, t, &names);
        }
    }

    out.push_str(LOAD_SOURCE);

    let _ = writeln!(out, "int main(int argc, char **argv)");
    out.push_str("{\n");
    let _ = writeln!(
        out,
        "\tconst char *input_path = argc > 1 ? argv[1] : \"input.raw\";"
    );
    let _ = writeln!(
        out,
        "\tconst char *output_path = argc > 2 ? argv[2] : \"output.raw\";"
    );
    let _ = writeln!(
        out,
        "\tconst long frames = argc > 3 ? strtol(argv[3], NULL, 10) : 1;"
    );
    out.push_str(PLATFORM_SETUP);
    let _ = writeln!(out, "\tchar *source = load_source(\"{}.cl\");", model.name);
    out.push_str(PROGRAM_SETUP);

    // Host staging arrays for every model array.
    out.push_str("\n\t/* host staging arrays */\n");
    for array in &model.arrays {
        let bytes = array.element.byte_width() * array.shape.len() as u64;
        let cty = builtins::c_type(array.element);
        let _ = writeln!(
            out,
            "\t{cty} *h_{} = ({cty} *)calloc({bytes}, 1);",
            names.array(&array.name)
        );
    }

    // Device buffers per plan entry.
    out.push_str("\n\t/* device buffers */\n");
    for entry in &plan.entries {
        let array = model.array(entry.array);
        let flags = if entry.read_only {
            "CL_MEM_READ_ONLY"
        } else {
            "CL_MEM_READ_WRITE"
        };
        let _ = writeln!(
            out,
            "\tcl_mem d_{name} = clCreateBuffer(context, {flags}, {bytes}, NULL, &err);\n\tCHECK(err, \"create buffer {name}\");",
            name = names.array(&array.name),
            bytes = entry.byte_size
        );
    }

    // Kernels and their fixed arguments.
    out.push_str("\n\t/* kernels */\n");
    for t in model.task_ids().filter(|&t| model.task_on_device(t)) {
        let task = model.task(t);
        let kname = names.task(&task.name);
        let _ = writeln!(
            out,
            "\tcl_kernel k_{kname} = clCreateKernel(program, \"{kname}\", &err);\n\tCHECK(err, \"create kernel {kname}\");"
        );
        for (i, a) in task_param_arrays(model, t).into_iter().enumerate() {
            let _ = writeln!(
                out,
                "\terr = clSetKernelArg(k_{kname}, {i}, sizeof(cl_mem), &d_{});\n\tCHECK(err, \"set arg {i} of {kname}\");",
                names.array(&model.array(a).name)
            );
        }
    }

    // Frame I/O.
    out.push_str(
        "\n\tFILE *fin = fopen(input_path, \"rb\");\n\
         \tif (!fin) { fprintf(stderr, \"cannot open %s\\n\", input_path); return 2; }\n\
         \tFILE *fout = fopen(output_path, \"wb\");\n\
         \tif (!fout) { fprintf(stderr, \"cannot open %s\\n\", output_path); return 2; }\n\n",
    );

    let _ = writeln!(out, "\tfor (long frame = 0; frame < frames; ++frame) {{");
    for a in model.input_arrays() {
        let array = model.array(a);
        let bytes = array.element.byte_width() * array.shape.len() as u64;
        let name = names.array(&array.name);
        let _ = writeln!(
            out,
            "\t\tif (fread(h_{name}, 1, {bytes}, fin) != {bytes}) {{\n\
             \t\t\tfprintf(stderr, \"frame %ld: input exhausted\\n\", frame);\n\
             \t\t\treturn 2;\n\
             \t\t}}",
        );
    }
    out.push('\n');

    for step in &schedule.steps {
        match *step {
            Step::HostToDevice(a) => {
                let name = names.array(&model.array(a).name);
                let bytes = plan.entry(a).expect("checked above").byte_size;
                let _ = writeln!(
                    out,
                    "\t\terr = clEnqueueWriteBuffer(queue, d_{name}, CL_TRUE, 0, {bytes}, h_{name}, 0, NULL, NULL);\n\
                     \t\tCHECK(err, \"write {name}\");\n\
                     \t\th2d_bytes += {bytes};"
                );
            }
            Step::DeviceToHost(a) => {
                let name = names.array(&model.array(a).name);
                let bytes = plan.entry(a).expect("checked above").byte_size;
                let _ = writeln!(
                    out,
                    "\t\terr = clEnqueueReadBuffer(queue, d_{name}, CL_TRUE, 0, {bytes}, h_{name}, 0, NULL, NULL);\n\
                     \t\tCHECK(err, \"read {name}\");\n\
                     \t\td2h_bytes += {bytes};"
                );
            }
            Step::Launch { task, .. } => {
                let topology = &topologies[&task];
                let kname = names.task(&model.task(task).name);
                let dims = topology.global.len();
                let g: Vec<String> = topology.global.iter().map(|v| v.to_string()).collect();
                let l: Vec<String> = topology.local.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(
                    out,
                    "\t\t{{\n\
                     \t\t\tsize_t global[{dims}] = {{{}}};\n\
                     \t\t\tsize_t local[{dims}] = {{{}}};\n\
                     \t\t\terr = clEnqueueNDRangeKernel(queue, k_{kname}, {dims}, NULL, global, local, 0, NULL, NULL);\n\
                     \t\t\tCHECK(err, \"launch {kname}\");\n\
                     \t\t}}",
                    g.join(", "),
                    l.join(", ")
                );
            }
            Step::HostTask { task } => {
                let args: Vec<String> = task_param_arrays(model, task)
                    .into_iter()
                    .map(|a| format!("h_{}", names.array(&model.array(a).name)))
                    .collect();
                let _ = writeln!(
                    out,
                    "\t\trun_{}({});",
                    names.task(&model.task(task).name),
                    args.join(", ")
                );
            }
        }
    }

    out.push('\n');
    for a in model.output_arrays() {
        let array = model.array(a);
        let bytes = array.element.byte_width() * array.shape.len() as u64;
        let _ = writeln!(
            out,
            "\t\tfwrite(h_{}, 1, {bytes}, fout);",
            names.array(&array.name)
        );
    }
    out.push_str("\t}\n\n");

    out.push_str(
        "\tclFinish(queue);\n\
         \tfclose(fin);\n\
         \tfclose(fout);\n\
         \tprintf(\"h2d_bytes=%llu d2h_bytes=%llu\\n\", h2d_bytes, d2h_bytes);\n",
    );
    for entry in &plan.entries {
        let _ = writeln!(
            out,
            "\tclReleaseMemObject(d_{});",
            names.array(&model.array(entry.array).name)
        );
    }
    for t in model.task_ids().filter(|&t| model.task_on_device(t)) {
        let _ = writeln!(
            out,
            "\tclReleaseKernel(k_{});",
            names.task(&model.task(t).name)
        );
    }
    out.push_str(
        "\tclReleaseProgram(program);\n\
         \tclReleaseCommandQueue(queue);\n\
         \tclReleaseContext(context);\n\
         \tfree(source);\n\
         \treturn 0;\n\
         }\n",
    );
    Ok(out)
}

/// Arrays a task touches, in kernel-parameter order (inputs then outputs,
/// deduplicated).
fn task_param_arrays(model: &Model, t: TaskId) -> Vec<crate::ir::ArrayId> {
    let mut out = model.task_input_arrays(t);
    for a in model.task_output_arrays(t) {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

/// A host-side task runner: the elementary step inside a loop over the whole
/// repetition space.
fn emit_host_task_fn(out: &mut String, model: &Model, t: TaskId, names: &Names) {
    let task = model.task(t);
    let mut params = Vec::new();
    for a in task_param_arrays(model, t) {
        let array = model.array(a);
        let writable = model.task_output_arrays(t).contains(&a);
        let cty = builtins::c_type(array.element);
        let constness = if writable { "" } else { "const " };
        params.push(format!("{constness}{cty} *{}", names.array(&array.name)));
    }
    let points: u128 = task
        .repetition_space
        .extents()
        .iter()
        .map(|&e| e as u128)
        .product();
    let _ = writeln!(
        out,
        "static void run_{}({})",
        names.task(&task.name),
        params.join(", ")
    );
    out.push_str("{\n");
    let _ = writeln!(out, "\tfor (size_t lid = 0; lid < {points}; ++lid) {{");
    emit_elementary_step(out, model, task, names, "\t\t");
    out.push_str("\t}\n}\n\n");
}

const HEADER: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#ifdef __APPLE__
#include <OpenCL/opencl.h>
#else
#include <CL/cl.h>
#endif

typedef unsigned char uchar;

#define CHECK(err, what) \
	do { \
		if ((err) != CL_SUCCESS) { \
			fprintf(stderr, "%s failed: error %d\n", (what), (int)(err)); \
			exit(1); \
		} \
	} while (0)

static unsigned long long h2d_bytes = 0;
static unsigned long long d2h_bytes = 0;

"#;

const LOAD_SOURCE: &str = r#"static char *load_source(const char *path)
{
	FILE *f = fopen(path, "rb");
	if (!f) {
		fprintf(stderr, "cannot open kernel source %s\n", path);
		exit(2);
	}
	fseek(f, 0, SEEK_END);
	long size = ftell(f);
	fseek(f, 0, SEEK_SET);
	char *buf = (char *)malloc((size_t)size + 1);
	if (fread(buf, 1, (size_t)size, f) != (size_t)size) {
		fprintf(stderr, "cannot read kernel source %s\n", path);
		exit(2);
	}
	buf[size] = '\0';
	fclose(f);
	return buf;
}

"#;

const PLATFORM_SETUP: &str = r#"
	cl_int err = CL_SUCCESS;
	cl_platform_id platform = NULL;
	err = clGetPlatformIDs(1, &platform, NULL);
	CHECK(err, "get platform");
	cl_device_id device = NULL;
	err = clGetDeviceIDs(platform, CL_DEVICE_TYPE_GPU, 1, &device, NULL);
	if (err != CL_SUCCESS) {
		err = clGetDeviceIDs(platform, CL_DEVICE_TYPE_ALL, 1, &device, NULL);
	}
	CHECK(err, "get device");
	cl_context context = clCreateContext(NULL, 1, &device, NULL, NULL, &err);
	CHECK(err, "create context");
	cl_command_queue queue = clCreateCommandQueue(context, device, 0, &err);
	CHECK(err, "create queue");
"#;

const PROGRAM_SETUP: &str = r#"	cl_program program = clCreateProgramWithSource(context, 1, (const char **)&source, NULL, &err);
	CHECK(err, "create program");
	err = clBuildProgram(program, 1, &device, "", NULL, NULL);
	if (err != CL_SUCCESS) {
		char log[16384];
		clGetProgramBuildInfo(program, device, CL_PROGRAM_BUILD_LOG, sizeof(log), log, NULL);
		fprintf(stderr, "kernel build failed:\n%s\n", log);
		exit(1);
	}
"#;
