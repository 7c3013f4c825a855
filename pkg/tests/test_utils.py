import time

from django.test import SimpleTestCase

from gapcert.fields import Affine
from gapcert.utils import import_callable, int_ranges, format_ranges, exec_in_parallel, exec_multi_arg_func


class TestImportCallable(SimpleTestCase):
    def test_str(self):
        self.assertEqual(Affine, import_callable('gapcert.fields.Affine'))

    def test_cls(self):
        self.assertEqual(Affine, import_callable(Affine))

    def test_invalid(self):
        with self.assertRaises(ImportError):
            import_callable('gapcert.fields.NoSuchField')
        with self.assertRaises(ImportError):
            import_callable('gapcert')
        with self.assertRaises(ImportError):
            import_callable('gapcert.fields.NAMED_FIELDS')


class TestIntRanges(SimpleTestCase):
    def test_simple(self):
        self.assertListEqual([(1, 3), (5, 6), (8, 10)],
                             list(int_ranges([1, 2, 3, 5, 6, 8, 9, 10])))

    def test_empty(self):
        self.assertListEqual([], list(int_ranges([])))

    def test_bounds(self):
        self.assertListEqual([(1, 1), (5, 6), (10, 10)],
                             list(int_ranges([10, 1, 5, 6, 6])))

    def test_format(self):
        self.assertEqual('1, 5-6, 10-19', format_ranges([10, 1, 5, 6] + list(range(11, 20))))


class TestExecInParallel(SimpleTestCase):
    def test_exec(self):
        res = exec_in_parallel(lambda x: x * x, [([i], {}) for i in range(10)], 4)
        self.assertListEqual([x * x for x in range(10)], res)

    def test_exec_no_count(self):
        res = exec_in_parallel(lambda x: x * x, [([i], {}) for i in range(10)])
        self.assertListEqual([x * x for x in range(10)], res)

    def test_order_does_not_depend_on_scheduling(self):
        def _slow_first(x):
            time.sleep(0.02 if x == 0 else 0.0)
            return x

        self.assertListEqual(list(range(6)), exec_multi_arg_func(_slow_first, range(6), threads_count=3))

    def test_extra_args(self):
        res = exec_multi_arg_func(lambda x, y, z=0: x + y + z, [1, 2, 3], 10, z=100, threads_count=2)
        self.assertListEqual([111, 112, 113], res)

    def test_empty(self):
        self.assertListEqual([], exec_multi_arg_func(lambda x: x, []))

    def test_exception(self):
        def _test_func(x):
            raise TypeError("Exception in thread %d" % x)

        with self.assertRaises(TypeError):
            exec_in_parallel(_test_func, [([i], {}) for i in range(10)])
