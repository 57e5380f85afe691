macro_rules! example {
    ($name:ident) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::main().expect(concat!(stringify!($name), " example should run"));
        }
    };
}

example!(back_action);
example!(sideband_operating_point);
example!(thermal_envelope);
example!(photon_events);
example!(hbt_g2);
example!(npsd_linewidth);
example!(calibrate_g0);
example!(threshold_sweep);
example!(sensitivity_nep);
example!(timetag_file);
