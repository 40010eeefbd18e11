"""Тесты симулятора деформированного уравнения Линдблада."""
