#pragma once

#include "catalogstitch/errors.hpp"
#include "catalogstitch/mask_geometry.hpp"
#include "catalogstitch/raster.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace catalogstitch {

/// One segmented scene entity: full-frame mask plus its tight bounding box.
struct EntityInstance {
    std::string id;
    BinaryMask mask;
    BBox bbox;

    /// Build from a full-frame mask; throws EmptyMaskError if the mask has no
    /// foreground after binarization.
    static EntityInstance from_mask(std::string id, BinaryMask mask) {
        BBox box = mask_to_bbox(mask);
        return EntityInstance{std::move(id), std::move(mask), box};
    }
};

/// Exact pixels of one occluder, cropped to its bounding box, with the
/// placement needed to paste them back verbatim.
struct OccluderEntry {
    std::string id;
    RasterImage pixels; // background crop, byte-equal to the source frame
    BinaryMask mask;    // crop of the occluder mask
    BBox coords;        // placement in the source frame
    double iou_with_target = 0.0;
};

/// All cached occluders for one scene plus the union of their full-frame
/// masks. Immutable after build_cache.
struct OccluderCache {
    std::vector<OccluderEntry> entries;
    BinaryMask union_mask;

    bool empty() const { return entries.empty(); }
};

/// Keep exactly the entities whose bounding box overlaps the target box with
/// IoU strictly greater than tau_occ, in input order.
inline std::vector<EntityInstance> detect_occluders(const std::vector<EntityInstance>& entities,
                                                    const BBox& target_bbox,
                                                    double tau_occ = 0.01) {
    std::vector<EntityInstance> out;
    for (const EntityInstance& e : entities) {
        if (bbox_iou(e.bbox, target_bbox) > tau_occ)
            out.push_back(e);
    }
    return out;
}

/// Cache the exact visible pixel support of each occluder. Entry pixels are
/// copied verbatim from the background; no filtering or synthesis. Entries
/// are ordered by decreasing bounding-box area so that when overlapping
/// occluders are pasted back in entry order, smaller ones land on top
/// (treated as nearer the camera). Ties keep input order.
inline OccluderCache build_cache(const RasterImage& background,
                                 const std::vector<EntityInstance>& occluders,
                                 const BBox& target_bbox = BBox{}) {
    OccluderCache cache;
    cache.union_mask = BinaryMask(background.width, background.height, 0);

    for (const EntityInstance& occ : occluders) {
        if (occ.mask.width != background.width || occ.mask.height != background.height)
            throw DimensionMismatchError("build_cache: occluder mask " +
                                         shape_string(occ.mask.width, occ.mask.height) +
                                         " vs background " +
                                         shape_string(background.width, background.height));
        OccluderEntry entry;
        entry.id = occ.id;
        entry.coords = occ.bbox;
        entry.pixels = crop(background, occ.bbox);
        entry.mask = crop(occ.mask, occ.bbox);
        entry.iou_with_target =
            target_bbox.area() > 0 ? bbox_iou(occ.bbox, target_bbox) : 0.0;
        cache.entries.push_back(std::move(entry));

        for (int y = occ.bbox.y; y < occ.bbox.bottom(); ++y)
            for (int x = occ.bbox.x; x < occ.bbox.right(); ++x)
                if (occ.mask.foreground(x, y))
                    cache.union_mask.set(x, y, 255);
    }

    std::stable_sort(cache.entries.begin(), cache.entries.end(),
                     [](const OccluderEntry& a, const OccluderEntry& b) {
                         return a.coords.area() > b.coords.area();
                     });
    return cache;
}

/// Paste every cached occluder back onto the composited frame:
/// output = composited outside the union mask, original background pixels on
/// it. Byte-exact on the union by construction; idempotent.
inline RasterImage restore(RasterImage composited, const OccluderCache& cache) {
    if (cache.entries.empty() && cache.union_mask.width == 0)
        return composited; // default-constructed cache: nothing to paste
    if (composited.width != cache.union_mask.width ||
        composited.height != cache.union_mask.height)
        throw DimensionMismatchError("restore: composited " +
                                     shape_string(composited.width, composited.height) +
                                     " vs cache frame " +
                                     shape_string(cache.union_mask.width, cache.union_mask.height));
    for (const OccluderEntry& entry : cache.entries)
        composited = alpha_paste(std::move(composited), entry.pixels, entry.mask,
                                 entry.coords);
    return composited;
}

} // namespace catalogstitch
