"""Command implementations behind the ``epskit`` entry point.

Each command takes a validated RunConfig and returns ``(artifacts, summary)``
where ``artifacts`` maps output file names to their text. Nothing here touches
the file system except reading the materials database and analysis input, so
outputs are byte-identical for a fixed config and seed.
"""
from __future__ import annotations

import io
import math

import numpy as np
from scipy.stats import linregress

from . import entanglement as ent
from .displacer import DisplacerSpec, walkoff_report
from .errors import ConfigError, EpskitError
from .materials import get_material
from .overlap import GaussianBeam, gaussian_overlap, predicted_rate, sweep_lateral_separation, write_sweep_csv
from .phasematch import (CrystalSpec, PumpSpec, phase_matching_temperature, solve_signal_idler,
                         spectral_temporal_widths)
from .report import DesignReport
from .stability import WAVES, Component, ComponentStack, ThermalScenario, displacer_stacks, relative_phase_variation
from .wedges import WedgeSpec, design_wedge_pair

ARMS = ("signal", "idler")


# ------------------------------------------------------------- builders

def material(cfg, name):
    path = cfg["run"]["materials"] or None
    return get_material(name, path)


def pump_spec(cfg):
    p = cfg["pump"]
    return PumpSpec(p["wavelength_nm"], p["bandwidth_nm"], p["power_mw"] * 1e-3)


def crystal_spec(cfg):
    c = cfg["crystal"]
    return CrystalSpec(material(cfg, c["material"]), c["length_mm"], c["poling_period_um"],
                       c["temperature_c"], c["poling_reference_c"])


def displacer_spec(cfg):
    d = cfg["displacer"]
    return DisplacerSpec(material(cfg, d["material"]), d["length_mm"], d["optic_angle_deg"], d["velocity_model"])


def wedge_spec(cfg):
    w = cfg["wedge"]
    return WedgeSpec(material(cfg, w["material"]), w["wedge_angle_deg"], 0.0, w["aperture_mm"] or None)


def beams(cfg):
    b = cfg["beams"]
    return {"signal": GaussianBeam.from_fwhm(b["fwhm_signal_mm"]),
            "idler": GaussianBeam.from_fwhm(b["fwhm_idler_mm"])}


def state_model(cfg):
    s = cfg["state"]
    return ent.BellStateModel(s["phase_rad"], s["visibility"],
                              dict(zip(s["basis_angles_deg"], s["basis_visibilities"])))


def detection_model(cfg):
    """Effective detection model, calibrated on the measured triple when one is given.

    The triple is taken at a maximum-correlation setting, so the calibration
    uses the mean state visibility.
    """
    d = cfg["detection"]
    if d["measured_N_hz"] > 0:
        cal = ent.calibrate_detection(d["measured_Ns_hz"], d["measured_Ni_hz"], d["measured_N_hz"],
                                      d["measured_power_mw"], cfg["state"]["visibility"], d["window_ns"])
        return ent.DetectionModel(cal.eta_s, cal.eta_i, d["dark_s_hz"], d["dark_i_hz"], d["window_ns"],
                                  cal.pair_rate_per_mw)
    return ent.DetectionModel(d["eta_s"], d["eta_i"], d["dark_s_hz"], d["dark_i_hz"], d["window_ns"],
                              d["pair_rate_per_mw"])


def stacks(cfg):
    st = cfg["stability"]
    if not st["component"]:
        return displacer_stacks(displacer_spec(cfg).material, cfg["displacer"]["length_mm"])
    out = {"cw": {}, "ccw": {}}
    for comp in st["component"]:
        out[comp["path"]].setdefault(comp["wave"], []).append(
            Component(material(cfg, comp["material"]), float(comp["length_mm"]), comp["axis"]))
    for path in out:
        for wave in WAVES:
            if wave not in out[path]:
                raise ConfigError(f"stability.component: no {path} stack for the {wave}")
        out[path] = {w: ComponentStack(c) for w, c in out[path].items()}
    return out["cw"], out["ccw"]


def _source(cfg, dotted):
    return "default" if dotted in cfg.defaulted else "config"


# -------------------------------------------------------------- design

def _phase_match(cfg):
    pump, crystal = pump_spec(cfg), crystal_spec(cfg)
    sv = cfg["solver"]
    sol = solve_signal_idler(pump, crystal, sv["scan_step_nm"], sv["xtol_nm"])
    return pump, crystal, sol


def _arm_designs(cfg, sol):
    disp = displacer_spec(cfg)
    t_disp = cfg["displacer"]["temperature_c"]
    wo = walkoff_report(disp, cfg["pump"]["wavelength_nm"], (sol.signal_nm, sol.idler_nm), t_disp)
    wedge = wedge_spec(cfg)
    t_w = cfg["wedge"]["temperature_c"]
    out = {}
    for arm, entry, lam in zip(ARMS, wo.entries, (sol.signal_nm, sol.idler_nm)):
        measured = cfg["wedge"][f"walkoff_{arm}_mm"]
        walkoff = measured if measured > 0 else abs(entry.spatial_mm)
        design = design_wedge_pair(walkoff, wedge, lam, t_w, initial_delay_ps=entry.temporal_ps)
        out[arm] = (entry, walkoff, measured > 0, design)
    return out


def design(cfg):
    pump, crystal, sol = _phase_match(cfg)
    rep = DesignReport("epskit design report")
    src = lambda k: _source(cfg, k)  # noqa: E731

    rep.add("input", "pump wavelength", pump.wavelength_nm, "nm", src("pump.wavelength_nm"))
    rep.add("input", "pump bandwidth", pump.bandwidth_nm, "nm", src("pump.bandwidth_nm"))
    rep.add("input", "crystal material", crystal.material.name, "", src("crystal.material"))
    rep.add("input", "crystal length", crystal.length_mm, "mm", src("crystal.length_mm"))
    rep.add("input", "poling period", crystal.poling_period_um, "um", src("crystal.poling_period_um"))
    rep.add("input", "crystal temperature", crystal.temperature_c, "C", src("crystal.temperature_c"))

    rep.add("phase matching", "signal wavelength", sol.signal_nm, "nm")
    rep.add("phase matching", "idler wavelength", sol.idler_nm, "nm")
    rel = abs(1 / pump.wavelength_nm - 1 / sol.signal_nm - 1 / sol.idler_nm) * pump.wavelength_nm
    rep.add("phase matching", "energy conservation error", rel, "1 (relative)")
    rep.add("phase matching", "residual mismatch", sol.residual_per_m, "1/m")
    rep.add("phase matching", "poling period at temperature", crystal.poling_period_at(), "um")
    target = cfg["crystal"]["target_signal_nm"]
    if target > 0:
        sv = cfg["solver"]
        t_pm = phase_matching_temperature(target, pump, crystal, (sv["temperature_min_c"], sv["temperature_max_c"]),
                                          scan_step_nm=sv["scan_step_nm"])
        rep.add("phase matching", "target signal wavelength", target, "nm", "config")
        rep.add("phase matching", "temperature for target signal", t_pm, "C")

    widths = spectral_temporal_widths(sol, pump, crystal, cfg["solver"]["width_convention"])
    rep.add("bandwidth", "width convention", widths.convention, "", src("solver.width_convention"))
    rep.add("bandwidth", "signal spectral half-width", widths.dw_signal, "rad/s")
    rep.add("bandwidth", "idler spectral half-width", widths.dw_idler, "rad/s")
    rep.add("bandwidth", "signal temporal width (1/e)", widths.tau_signal_ps, "ps")
    rep.add("bandwidth", "idler temporal width (1/e)", widths.tau_idler_ps, "ps")

    disp = displacer_spec(cfg)
    rep.add("displacer", "material", disp.material.name, "", src("displacer.material"))
    rep.add("displacer", "length", disp.length_mm, "mm", src("displacer.length_mm"))
    rep.add("displacer", "optic angle", disp.optic_angle_deg, "deg", src("displacer.optic_angle_deg"))
    rep.add("displacer", "velocity model", disp.velocity_model, "", src("displacer.velocity_model"))

    bm = beams(cfg)
    arms = _arm_designs(cfg, sol)
    overlaps_before, overlaps_after = {}, {}
    for arm, (entry, walkoff, measured, d) in arms.items():
        rep.add("displacer", f"{arm} spatial walk-off", entry.spatial_mm, "mm")
        rep.add("displacer", f"{arm} temporal walk-off", entry.temporal_ps, "ps")
    wedge = wedge_spec(cfg)
    rep.add("wedges", "material", wedge.material.name, "", src("wedge.material"))
    rep.add("wedges", "wedge angle", wedge.wedge_angle_deg, "deg", src("wedge.wedge_angle_deg"))
    for arm, (entry, walkoff, measured, d) in arms.items():
        rep.add("wedges", f"{arm} walk-off to cancel", walkoff, "mm", "config" if measured else "computed")
        rep.add("wedges", f"{arm} delay to cancel", d.initial_delay_ps, "ps")
        rep.add("wedges", f"{arm} lateral separation d", d.d_mm, "mm")
        rep.add("wedges", f"{arm} thickness", d.wedge.thickness_mm, "mm")
        rep.add("wedges", f"{arm} orientation swapped", d.swapped, "")
        rep.add("wedges", f"{arm} residual walk-off", d.residual_walkoff_um, "um")
        rep.add("wedges", f"{arm} residual delay", d.residual_delay_fs, "fs")
        overlaps_before[arm] = gaussian_overlap(bm[arm], bm[arm], walkoff)
        overlaps_after[arm] = gaussian_overlap(bm[arm], bm[arm], d.residual_walkoff_um * 1e-3)

    for arm in ARMS:
        rep.add("overlap", f"{arm} beam FWHM", bm[arm].fwhm_mm, "mm", src(f"beams.fwhm_{arm}_mm"))
        rep.add("overlap", f"{arm} overlap uncompensated", overlaps_before[arm], "1")
        rep.add("overlap", f"{arm} overlap compensated", overlaps_after[arm], "1")
    before = predicted_rate(1.0, overlaps_before["signal"], overlaps_before["idler"])
    after = predicted_rate(1.0, overlaps_after["signal"], overlaps_after["idler"])
    rep.add("overlap", "relative rate uncompensated", before, "1")
    rep.add("overlap", "relative rate compensated", after, "1")
    rep.add("overlap", "compensation gain", after / before, "1")

    cw, ccw = stacks(cfg)
    st = cfg["stability"]
    loop = relative_phase_variation(cw, ccw, pump.wavelength_nm, sol.signal_nm, sol.idler_nm,
                                    ThermalScenario(1.0, st["baseline_c"]))
    rep.add("stability", "relative phase drift per K", loop.relative / math.pi, "pi rad/K")
    rep.add("stability", "drift per K without self-compensation", loop.no_selfcomp / math.pi, "pi rad/K")

    d = cfg["detection"]
    if d["measured_N_hz"] > 0:
        rec = ent.CountRecord(0.0, 0.0, 0.0, d["measured_Ns_hz"], d["measured_Ni_hz"], d["measured_N_hz"], True)
        pr = ent.pair_rate_and_heralding(rec)
        rep.add("detection", "pair rate (Klyshko)", pr.rate_hz.value, "Hz")
        rep.add("detection", "signal heralding", pr.eta_s.value, "1")
        rep.add("detection", "idler heralding", pr.eta_i.value, "1")
        rep.add("detection", "signal budget efficiency", d["eta_s"], "1", src("detection.eta_s"))
        rep.add("detection", "idler budget efficiency", d["eta_i"], "1", src("detection.eta_i"))
        rep.add("detection", "signal unaccounted loss factor", ent.unaccounted_loss(pr.eta_s.value, d["eta_s"]), "1")
        rep.add("detection", "idler unaccounted loss factor", ent.unaccounted_loss(pr.eta_i.value, d["eta_i"]), "1")

    if cfg.defaulted:
        rep.notes.append("defaults applied: " + ", ".join(cfg.defaulted))
    text = rep.to_text()
    return {"design_report.txt": text, "design_report.csv": rep.to_csv()}, text


# --------------------------------------------------------------- sweep

def sweep(cfg):
    _, _, sol = _phase_match(cfg)
    arms = _arm_designs(cfg, sol)
    arm = cfg["sweep"]["arm"]
    other = "idler" if arm == "signal" else "signal"
    bm = beams(cfg)
    d_other = arms[other][3]
    other_overlap = gaussian_overlap(bm[other], bm[other], d_other.residual_walkoff_um * 1e-3)
    points = sweep_lateral_separation(arms[arm][3], bm[arm], bm[arm], cfg["sweep"]["separations_mm"],
                                      other_overlap, cfg["sweep"]["max_workers"] or None)
    buf = io.StringIO()
    write_sweep_csv(points, buf)
    best = max(points, key=lambda p: p.overlap)
    summary = (f"{arm} sweep: designed d = {arms[arm][3].d_mm:.4f} mm; "
               f"peak overlap {best.overlap:.6f} at d = {best.d_mm:g} mm\n")
    return {f"sweep_{arm}.csv": buf.getvalue()}, summary


# ------------------------------------------------------------ simulate

def _records_csv(records):
    buf = io.StringIO()
    ent.write_records_csv(records, buf)
    return buf.getvalue()


def _power_label(p):
    return f"{p:g}".replace(".", "p")


def simulate(cfg, seed):
    state, det = state_model(cfg), detection_model(cfg)
    sim = cfg["simulate"]
    power = cfg["pump"]["power_mw"]
    bg = sim["bg_subtracted"]
    powers = sim["powers_mw"]
    seeds = ent.spawn_seeds(seed, 2 + len(powers))

    scan_bases = ent.correlation_scan_bases(sim["idler_angles_deg"], sim["scan_step_deg"], sim["scan_stop_deg"])
    scan = ent.simulate_experiment(state, det, power, scan_bases, sim["duration_s"], seeds[0], bg)
    chsh_recs = ent.simulate_experiment(state, det, power, ent.chsh_settings(tuple(sim["chsh_angles_deg"])),
                                        sim["chsh_duration_s"], seeds[1], bg)
    artifacts = {"correlation_scan.csv": _records_csv(scan), "chsh_settings.csv": _records_csv(chsh_recs)}

    peak_bases = [(a, a) for a in sim["idler_angles_deg"]]
    by_power = []
    for p, s in zip(powers, seeds[2:]):
        recs = ent.simulate_experiment(state, det, p, peak_bases, sim["duration_s"], s, bg)
        artifacts[f"power_scan_{_power_label(p)}mW.csv"] = _records_csv(recs)
        by_power.append((p, recs))

    rep = DesignReport("epskit simulation summary")
    rep.add("input", "master seed", seed, "1", "config")
    rep.add("input", "effective signal efficiency", det.eta_s, "1")
    rep.add("input", "effective idler efficiency", det.eta_i, "1")
    rep.add("input", "pair rate per mW", det.pair_rate_per_mw, "Hz/mW")
    for angle in sim["idler_angles_deg"]:
        sub = [r for r in scan if r.theta_i_deg == angle]
        v = ent.visibility(sub, "fit")
        rep.add("correlation", f"visibility at idler {angle:g} deg", v.value, "1")
        rep.add("correlation", f"visibility sigma at idler {angle:g} deg", v.sigma, "1")
    chsh = ent.chsh_from_records(chsh_recs, tuple(sim["chsh_angles_deg"]))
    rep.add("chsh", "S", chsh.S, "1")
    rep.add("chsh", "S sigma", chsh.sigma, "1")
    rep.add("chsh", "violation", chsh.n_sigma, "sigma")

    summary = ent.power_scan_summary(by_power)
    if summary:
        buf = io.StringIO()
        buf.write("power_mw,pair_rate_hz,pair_rate_sigma_hz,eta_s,eta_s_sigma,eta_i,eta_i_sigma\n")
        for pt in summary:
            buf.write(",".join(repr(float(v)) for v in (pt.power_mw, pt.pair_rate.value, pt.pair_rate.sigma,
                                                         pt.eta_s.value, pt.eta_s.sigma, pt.eta_i.value,
                                                         pt.eta_i.sigma)) + "\n")
        artifacts["power_scan_summary.csv"] = buf.getvalue()
        if len(summary) >= 2:
            fit = linregress([p.power_mw for p in summary], [p.pair_rate.value for p in summary])
            rep.add("power scan", "pair rate slope", fit.slope, "Hz/mW")
            rep.add("power scan", "pair rate R^2", fit.rvalue**2, "1")
        for key in ("eta_s", "eta_i"):
            vals = np.array([getattr(p, key).value for p in summary])
            rep.add("power scan", f"{key} relative spread", float(np.ptp(vals) / vals.mean()), "1")
    text = rep.to_text()
    artifacts["simulate_summary.txt"] = text
    artifacts["simulate_summary.csv"] = rep.to_csv()
    return artifacts, text


# ----------------------------------------------------------- stability

def stability(cfg):
    _, _, sol = _phase_match(cfg)
    cw, ccw = stacks(cfg)
    st = cfg["stability"]
    lam = (cfg["pump"]["wavelength_nm"], sol.signal_nm, sol.idler_nm)
    rep = DesignReport("epskit phase budget")
    rep.add("input", "temperature excursion", st["delta_temperature_k"], "K", _source(cfg, "stability.delta_temperature_k"))
    rep.add("input", "baseline temperature", st["baseline_c"], "C", _source(cfg, "stability.baseline_c"))
    for label, dT in (("per K", 1.0), ("at excursion", st["delta_temperature_k"])):
        loop = relative_phase_variation(cw, ccw, *lam, ThermalScenario(dT, st["baseline_c"]))
        for wave, lam_nm in zip(WAVES, lam):
            rep.add(f"budget {label}", f"{wave} ({lam_nm:.2f} nm) relative drift", loop.per_wave[wave] / math.pi, "pi rad")
        rep.add(f"budget {label}", "clockwise path drift", loop.cw / math.pi, "pi rad")
        rep.add(f"budget {label}", "counter-clockwise path drift", loop.ccw / math.pi, "pi rad")
        rep.add(f"budget {label}", "relative phase drift", loop.relative / math.pi, "pi rad")
        rep.add(f"budget {label}", "drift without self-compensation", loop.no_selfcomp / math.pi, "pi rad")
    text = rep.to_text()
    return {"stability_report.txt": text, "stability_report.csv": rep.to_csv()}, text


# ------------------------------------------------------------- analyze

def analyze(cfg, records, origin="<records>"):
    if not records:
        raise EpskitError(f"no records in {origin}", module="analyze")
    rep = DesignReport("epskit analysis")
    rep.add("input", "records", len(records), "1")

    by_idler = {}
    for r in records:
        by_idler.setdefault(r.theta_i_deg, []).append(r)
    vis = []
    for angle in sorted(by_idler):
        sub = by_idler[angle]
        if len({round(r.theta_s_deg % 180, 9) for r in sub}) >= 3:
            v = ent.visibility(sub, "fit")
            vm = ent.visibility(sub, "minmax")
            vis.append(v.value)
            rep.add("visibility", f"idler {angle:g} deg (fit)", v.value, "1")
            rep.add("visibility", f"idler {angle:g} deg (fit) sigma", v.sigma, "1")
            rep.add("visibility", f"idler {angle:g} deg (min/max)", vm.value, "1")
            rep.add("visibility", f"idler {angle:g} deg (min/max) sigma", vm.sigma, "1")
    if vis:
        mean_v = float(np.mean(vis))
        rep.add("visibility", "mean", mean_v, "1")
        rep.add("visibility", "expected S from mean", 2 * math.sqrt(2) * mean_v, "1")

    angles = tuple(cfg["simulate"]["chsh_angles_deg"])
    try:
        chsh = ent.chsh_from_records(records, angles)
    except ent.UndefinedEstimateError as exc:
        rep.notes.append(f"CHSH not evaluated: {exc.args[0]}")
    else:
        for name, e in zip(("E(a,b)", "E(a,d)", "E(g,d)", "E(g,b)"), chsh.E):
            rep.add("chsh", name, e.value, "1")
        rep.add("chsh", "S", chsh.S, "1")
        rep.add("chsh", "S sigma", chsh.sigma, "1")
        rep.add("chsh", "violation", chsh.n_sigma, "sigma")

    peak = [r for r in records if r.N_hz > 0 and ent._same_angle(r.theta_s_deg, r.theta_i_deg)]
    peak = peak or [max(records, key=lambda r: r.N_hz)]
    if peak[0].N_hz > 0:
        est = [ent.pair_rate_and_heralding(r) for r in peak]
        rep.add("pair rate", "records used", len(est), "1")
        rep.add("pair rate", "pair rate (Klyshko)", float(np.mean([e.rate_hz.value for e in est])), "Hz")
        rep.add("pair rate", "signal heralding", float(np.mean([e.eta_s.value for e in est])), "1")
        rep.add("pair rate", "idler heralding", float(np.mean([e.eta_i.value for e in est])), "1")
    else:
        rep.notes.append("pair rate not evaluated: no coincidences")
    text = rep.to_text()
    return {"analysis_report.txt": text, "analysis_report.csv": rep.to_csv()}, text
