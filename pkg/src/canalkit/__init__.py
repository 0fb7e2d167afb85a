"""canalkit: canal surfaces, generalized tubes and their lines of curvature."""

from .errors import CanalkitError
from .spine import (FrenetFrame, RawCurve, SpineCurve, arclength_reparametrize, classify_spine,
                    eval_frenet, make_builtin_spine, sampled_spine)
from .surface import (CanalSurface, GeneralizedTube, Profile, RadiusFunction, eval_canal_point,
                      eval_gt_point, is_regular_at, make_canal, make_generalized_tube)
from .forms import (FirstForm, SecondForm, ShapeOperatorAt, first_form_closed,
                    fundamental_forms_numeric, gt_F_f_closed, second_form_f_closed,
                    shape_operator, unit_normal_closed)
from .loc import (CurvatureLineTrace, LocReport, is_line_of_curvature, loc_residual,
                  theta_curve_obstruction, trace_curvature_line, verify_theorem3,
                  vessiot_integrate)
from .radius import (SynthesisResult, check_torsion_bound, synth_radius_circular_helix,
                     synth_radius_general_helix, synth_radius_quadrature, synth_radius_salkowski)
from .mesh import QuadMesh, export_obj, export_polyline_csv, tessellate

__version__ = "0.1.0"
