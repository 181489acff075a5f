#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "boxseg/data.hpp"
#include "boxseg/losses.hpp"
#include "boxseg/m2b.hpp"
#include "boxseg/metrics.hpp"
#include "boxseg/trainer.hpp"

namespace py = pybind11;
using namespace boxseg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Grid to_grid(const Array& a) {
    const auto info = a.request();
    if (info.ndim != 2) throw std::invalid_argument("expected a 2-D array");
    Grid g(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]));
    const double* src = static_cast<const double*>(info.ptr);
    std::copy(src, src + g.size(), g.data());
    return g;
}

Array from_grid(const Grid& g) {
    Array a({g.height(), g.width()});
    std::copy(g.data(), g.data() + g.size(), static_cast<double*>(a.request().ptr));
    return a;
}

nn::Tensor3 to_tensor(const Array& a) {
    const auto info = a.request();
    if (info.ndim != 3) throw std::invalid_argument("expected a 3-D array (C,H,W)");
    nn::Tensor3 t(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]),
                  static_cast<int>(info.shape[2]));
    const double* src = static_cast<const double*>(info.ptr);
    std::copy(src, src + t.size(), t.v.data());
    return t;
}

Array from_tensor(const nn::Tensor3& t) {
    Array a({t.channels, t.height, t.width});
    std::copy(t.v.data(), t.v.data() + t.size(), static_cast<double*>(a.request().ptr));
    return a;
}

BoxMask to_box_mask(const Array& a) {
    BoxMask bm;
    bm.values = to_grid(a);
    for (size_t i = 0; i < bm.values.size(); ++i)
        bm.values[i] = bm.values[i] != 0.0 ? 1.0 : 0.0;
    bm.boxes = mask_to_boxes(bm.values);
    return bm;
}

py::tuple box_tuple(const Box& b) {
    return py::make_tuple(b.row_min, b.col_min, b.row_max, b.col_max);
}

py::dict report_dict(const LossReport& r) {
    py::dict d;
    d["bce"] = r.bce;
    d["dice"] = r.dice;
    d["sum"] = r.sum_loss;
    d["sc"] = r.sc;
    d["total"] = r.total;
    d["empty_box"] = r.empty_box;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Box-supervised segmentation core: mask-to-box transform, losses, metrics, data";

    m.def(
        "project",
        [](const Array& mask) {
            const ProjectionPair p = project(to_grid(mask));
            return py::make_tuple(py::cast(p.row_profile), py::cast(p.col_profile));
        },
        py::arg("mask"),
        "Per-axis max profiles (row_profile over columns, col_profile over rows).");

    m.def(
        "back_project",
        [](const std::vector<double>& row_profile, const std::vector<double>& col_profile) {
            ProjectionPair p{row_profile, col_profile};
            return from_grid(back_project(p, static_cast<int>(col_profile.size()),
                                          static_cast<int>(row_profile.size())));
        },
        py::arg("row_profile"), py::arg("col_profile"),
        "Broadcast-min reconstruction of an HxW mask from the two profiles.");

    m.def(
        "m2b", [](const Array& mask) { return from_grid(m2b(to_grid(mask))); }, py::arg("mask"),
        "Mask-to-box transform (projection followed by back-projection).");

    m.def(
        "m2b_backward",
        [](const Array& mask, const Array& upstream) {
            return from_grid(m2b_backward(to_grid(mask), to_grid(upstream)));
        },
        py::arg("mask"), py::arg("upstream_grad"),
        "Vector-Jacobian product of m2b at `mask`.");

    m.def(
        "bce_loss",
        [](const Array& pred, const Array& target) {
            return bce_loss(to_grid(pred), to_grid(target));
        },
        py::arg("pred"), py::arg("target"));

    m.def(
        "dice_loss",
        [](const Array& pred, const Array& target) {
            return dice_loss(to_grid(pred), to_grid(target));
        },
        py::arg("pred"), py::arg("target"));

    m.def(
        "sum_loss",
        [](const Array& t1, const Array& t2, const Array& box_mask) {
            return sum_loss(to_grid(t1), to_grid(t2), to_box_mask(box_mask));
        },
        py::arg("t1"), py::arg("t2"), py::arg("box_mask"));

    m.def(
        "sc_loss",
        [](const Array& p1, const Array& p2, const Array& box_mask) {
            return sc_loss(to_grid(p1), to_grid(p2), to_box_mask(box_mask));
        },
        py::arg("p1"), py::arg("p2"), py::arg("box_mask"));

    m.def(
        "total_loss",
        [](const Array& p1, const Array& p2, const Array& box_mask) {
            return report_dict(total_loss(to_grid(p1), to_grid(p2), to_box_mask(box_mask)));
        },
        py::arg("p1"), py::arg("p2"), py::arg("box_mask"),
        "Box supervision through m2b plus the scale-consistency term.");

    m.def(
        "total_loss_grads",
        [](const Array& p1, const Array& p2, const Array& box_mask) {
            const TotalLossGrads g =
                total_loss_with_grads(to_grid(p1), to_grid(p2), to_box_mask(box_mask));
            return py::make_tuple(report_dict(g.report), from_grid(g.d_p1), from_grid(g.d_p2));
        },
        py::arg("p1"), py::arg("p2"), py::arg("box_mask"));

    m.def(
        "dice_metric",
        [](const Array& pred, const Array& gt, double threshold) {
            return dice_metric(to_grid(pred), to_grid(gt), threshold);
        },
        py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.5);

    m.def(
        "iou_metric",
        [](const Array& pred, const Array& gt, double threshold) {
            return iou_metric(to_grid(pred), to_grid(gt), threshold);
        },
        py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.5);

    m.def(
        "mask_to_boxes",
        [](const Array& mask) {
            py::list out;
            for (const Box& b : mask_to_boxes(to_grid(mask))) out.append(box_tuple(b));
            return out;
        },
        py::arg("mask"), "Tight inclusive boxes of the 4-connected components.");

    m.def(
        "render_boxes",
        [](int height, int width, const std::vector<std::array<int, 4>>& boxes) {
            std::vector<Box> bs;
            bs.reserve(boxes.size());
            for (const auto& b : boxes) bs.push_back(Box{b[0], b[1], b[2], b[3]});
            return from_grid(BoxMask::render(height, width, bs).values);
        },
        py::arg("height"), py::arg("width"), py::arg("boxes"),
        "Binary union mask of inclusive (row_min, col_min, row_max, col_max) boxes.");

    m.def(
        "generate_synthetic",
        [](int count, int image_size, uint64_t seed, std::pair<int, int> blob_count_range,
           std::pair<double, double> blob_scale_range, double texture_noise, double contrast) {
            SynthConfig cfg;
            cfg.count = count;
            cfg.image_size = image_size;
            cfg.seed = seed;
            cfg.blob_count_range = blob_count_range;
            cfg.blob_scale_range = blob_scale_range;
            cfg.texture_noise = texture_noise;
            cfg.contrast = contrast;
            py::list out;
            for (const Sample& s : generate_synthetic(cfg)) {
                py::dict d;
                d["id"] = s.id;
                d["image"] = from_tensor(s.image);
                d["mask"] = from_grid(*s.gt_mask);
                py::list boxes;
                for (const Box& b : s.boxes) boxes.append(box_tuple(b));
                d["boxes"] = boxes;
                out.append(d);
            }
            return out;
        },
        py::arg("count"), py::arg("image_size") = 96, py::arg("seed") = 0,
        py::arg("blob_count_range") = std::pair<int, int>{1, 3},
        py::arg("blob_scale_range") = std::pair<double, double>{0.2, 0.4},
        py::arg("texture_noise") = 0.06, py::arg("contrast") = 0.3);

    m.def(
        "infer_checkpoint",
        [](const std::string& checkpoint_path, const Array& image) {
            const TrainState state = load_checkpoint(checkpoint_path);
            return from_grid(infer(to_tensor(image), state));
        },
        py::arg("checkpoint_path"), py::arg("image"),
        "Load a training checkpoint and run single-scale inference on a (3,H,W) image.");
}
